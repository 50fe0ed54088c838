mod common;

use std::f64::consts::SQRT_2;

use ehglue::curvature::{lie_bracket, lie_derivative_form, lie_derivative_sym2, vector_jet1};
use ehglue::eh::{
    alpha_forms, o_norm_integral, euler_field, symmetry_check, vector_fields_v, EhMetric, EhParams, OTensor, SymmetryMap,
    TensorT,
};
use ehglue::field::finite_difference_gradient;
use ehglue::{Euclidean, Jet2, Sym2, Sym2Field};
use proptest::prelude::*;

/// Roundoff floor for g^{ij}h_{ij}: a few ulps times cond(g)·|h|_g.
fn trace_tolerance(g: &Sym2, h: &Sym2) -> f64 {
    let e = g.eigenvalues();
    let cond = e[3] / e[0];
    let hn = ehglue::inner_product(g, h, h).unwrap().sqrt();
    64.0 * f64::EPSILON * cond * hn.max(f64::MIN_POSITIVE)
}

fn eh(eps: f64) -> EhMetric {
    EhMetric::new(EhParams::new(eps).unwrap())
}

fn o(i: usize, eps: f64) -> OTensor {
    OTensor::new(i, EhParams::new(eps).unwrap()).unwrap()
}

#[test]
fn alpha_at_unit_axis() {
    let a = alpha_forms(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    for (k, form) in a.iter().enumerate() {
        for (i, c) in form.iter().enumerate() {
            assert_eq!(c.value, if i == k + 1 { 1.0 } else { 0.0 });
        }
    }
    let a = alpha_forms(&[0.0, 2.0, 0.0, 0.0]).unwrap();
    assert_eq!(a[0][0].value, -0.5);
    assert_eq!(a[0][1].value, 0.0);
    assert!(alpha_forms(&[0.0; 4]).is_err());
}

#[test]
fn alpha_norm_and_radial_contraction() {
    for x in common::shell_points(1, 100, 0.1, 10.0) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let a = alpha_forms(&x).unwrap();
        for form in &a {
            let n2: f64 = form.iter().map(|c| c.value * c.value).sum();
            assert!((n2 * r2 - 1.0).abs() < 1e-14);
            let radial: f64 = form.iter().zip(&x).map(|(c, xi)| c.value * xi).sum();
            assert!(radial.abs() < 1e-14 * r2.sqrt().max(1.0));
        }
    }
}

#[test]
fn eh_metric_examples() {
    let g = eh(1.0).value_at(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    let expect = Sym2::diag([1.0 / SQRT_2, 1.0 / SQRT_2, SQRT_2, SQRT_2]);
    assert!((g - expect).max_abs() < 1e-15);
    let g0 = eh(0.0).value_at(&[0.3, 0.1, -0.2, 0.5]).unwrap();
    assert_eq!(g0, Sym2::identity());
    for x in common::shell_points(2, 200, 0.3, 5.0) {
        let det = eh(1.0).value_at(&x).unwrap().determinant();
        assert!((det - 1.0).abs() < 1e-12, "det {det} at {x:?}");
    }
}

#[test]
fn eh_core_is_excluded() {
    assert!(eh(1.0).eval(&[1e-7, 0.0, 0.0, 0.0]).is_err());
    assert!(eh(1.0).eval(&[2e-6, 0.0, 0.0, 0.0]).is_ok());
}

#[test]
fn jets_match_finite_differences() {
    let fields: Vec<Box<dyn Sym2Field>> = vec![
        Box::new(eh(1.0)),
        Box::new(EhMetric::hat(EhParams::new(0.7).unwrap())),
        Box::new(TensorT::plain()),
        Box::new(TensorT::hat()),
        Box::new(o(1, 1.0)),
        Box::new(o(2, 1.0)),
        Box::new(o(3, 1.3)),
    ];
    for f in &fields {
        for x in common::shell_points(3, 10, 0.5, 2.0) {
            let j = f.eval(&x).unwrap();
            for c in 0..10 {
                let fd = finite_difference_gradient(f, &x, c, 1e-5).unwrap();
                for k in 0..4 {
                    assert!((fd[k] - j.comps[c].grad[k]).abs() < 1e-8, "{} vs {}", fd[k], j.comps[c].grad[k]);
                }
            }
        }
    }
}

#[test]
fn t_examples_and_trace() {
    let t = TensorT::plain().value_at(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(t, Sym2::diag([-1.0, -1.0, 1.0, 1.0]));
    for x in common::shell_points(4, 100, 0.1, 3.0) {
        assert!(TensorT::plain().value_at(&x).unwrap().trace().abs() < 1e-14 * common::norm(&x).powi(-4));
        assert!(TensorT::hat().value_at(&x).unwrap().trace().abs() < 1e-14 * common::norm(&x).powi(-4));
    }
}

#[test]
fn t_matches_frame_form() {
    // T = −r^{-4}(dr² + r²α₁² − r²α₂² − r²α₃²)
    for x in common::shell_points(5, 20, 0.3, 3.0) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let a = alpha_forms(&x).unwrap();
        let mut expect = Sym2::ZERO;
        for i in 0..4 {
            for j in i..4 {
                let dr = x[i] * x[j] / r2;
                let v = dr + r2 * (a[0][i].value * a[0][j].value - a[1][i].value * a[1][j].value
                    - a[2][i].value * a[2][j].value);
                expect.set(i, j, -v / (r2 * r2));
            }
        }
        let t = TensorT::plain().value_at(&x).unwrap();
        assert!((t - expect).max_abs() < 1e-13 * expect.max_abs().max(1.0));
    }
}

#[test]
fn reflected_metric_is_pullback() {
    let r = SymmetryMap {
        linear: [[-1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
        translation: [0.0; 4],
        name: "R",
    };
    let g = eh(0.8);
    let gh = EhMetric::hat(EhParams::new(0.8).unwrap());
    for x in common::shell_points(6, 50, 0.2, 4.0) {
        let lhs = gh.value_at(&x).unwrap();
        let rhs = r.pullback_value(&g.value_at(&r.apply(&x)).unwrap());
        assert!((lhs - rhs).max_abs() < 1e-15);
    }
    // T̂ is the reflection of T as well
    for x in common::shell_points(7, 20, 0.2, 4.0) {
        let lhs = TensorT::hat().value_at(&x).unwrap();
        let rhs = r.pullback_value(&TensorT::plain().value_at(&r.apply(&x)).unwrap());
        assert!((lhs - rhs).max_abs() < 1e-13);
    }
}

fn remainder_slope<F: Sym2Field, G: Sym2Field>(g: &F, t: &G, eps: f64) -> f64 {
    let dir = common::unit_vector(&mut common::rng(9));
    let rs = [10.0, 20.0, 40.0, 80.0];
    let vals: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let x = dir.map(|v| v * r);
            let diff = g.value_at(&x).unwrap() - Sym2::identity() - t.value_at(&x).unwrap().scale(0.5 * eps.powi(4));
            diff.norm()
        })
        .collect();
    common::loglog_slope(&rs, &vals)
}

#[test]
fn asymptotic_expansion_decays_like_r_minus_8() {
    let s = remainder_slope(&eh(1.0), &TensorT::plain(), 1.0);
    assert!((s + 8.0).abs() < 0.3, "slope {s}");
    let s = remainder_slope(&EhMetric::hat(EhParams::new(1.0).unwrap()), &TensorT::hat(), 1.0);
    assert!((s + 8.0).abs() < 0.3, "slope {s}");
}

#[test]
fn o1_example_and_norms() {
    let v = o(1, 1.0).value_at(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    let e = Sym2::diag([-0.5 / SQRT_2, -0.5 / SQRT_2, 1.0 / SQRT_2, 1.0 / SQRT_2]);
    assert!((v - e).max_abs() < 1e-15);
    for eps in [0.5, 1.0, 2.0] {
        for x in common::shell_points(10, 50, 0.3 * eps, 5.0 * eps) {
            let g = eh(eps).value_at(&x).unwrap();
            let r = common::norm(&x);
            let expect = 4.0 * (eps.powi(4) / (eps.powi(4) + r.powi(4))).powi(2);
            for i in 1..=3 {
                let oi = o(i, eps).value_at(&x).unwrap();
                let n = ehglue::inner_product(&g, &oi, &oi).unwrap();
                assert!((n - expect).abs() < 1e-12 * expect.max(1e-3), "o{i}: {n} vs {expect}");
                let tr = ehglue::inner_product(&g, &g, &oi).unwrap();
                assert!(tr.abs() < trace_tolerance(&g, &oi), "trace {tr}");
            }
        }
    }
    // at r = ε the norm is 1
    let x = [0.0, 0.0, 0.7, 0.0];
    let g = eh(0.7).value_at(&x).unwrap();
    let o1 = o(1, 0.7).value_at(&x).unwrap();
    assert!((ehglue::inner_product(&g, &o1, &o1).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn kernel_tensor_l2_norm() {
    for eps in [0.5_f64, 1.0, 2.0] {
        let want = 2.0 * std::f64::consts::PI.powi(2) * eps.powi(4);
        for i in 1..=3 {
            let est = o_norm_integral(&o(i, eps), &[0.3, -0.2, 0.5, 0.1], 1e-12).unwrap();
            assert!((est.value / want - 1.0).abs() < 1e-6, "o{i} eps {eps}: {est:?}");
        }
    }
    assert!(o_norm_integral(&o(1, 1.0), &[0.0; 4], 1e-12).is_err());
}

#[test]
fn o1_minus_eps4_t_decays_like_r_minus_8() {
    let eps: f64 = 0.5;
    let dir = common::unit_vector(&mut common::rng(11));
    let rs = [10.0 * eps, 20.0 * eps, 40.0 * eps];
    let vals: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let x = dir.map(|v| v * r);
            (o(1, eps).value_at(&x).unwrap() - TensorT::plain().value_at(&x).unwrap().scale(eps.powi(4))).norm()
        })
        .collect();
    let s = common::loglog_slope(&rs, &vals);
    assert!((s + 8.0).abs() < 0.3, "slope {s}");
}

#[test]
fn o1_is_scale_derivative_and_lie_form() {
    for x in common::shell_points(12, 30, 0.2, 4.0) {
        let eps: f64 = 1.0;
        let gj = eh(eps).eval(&x).unwrap();
        let lie = lie_derivative_sym2(&gj, &vector_jet1(&euler_field(&x)));
        let lhs = gj.value() - lie.scale(0.5);
        let o1 = o(1, eps).value_at(&x).unwrap();
        assert!((lhs - o1).max_abs() < 1e-12, "{}", (lhs - o1).max_abs());
        // ½ε∂_ε g by a fourth-order central difference in ε
        let h = 1e-3;
        let gv = |e: f64| eh(e).value_at(&x).unwrap();
        let d = (gv(eps - 2.0 * h) - gv(eps + 2.0 * h) + (gv(eps + h) - gv(eps - h)).scale(8.0)).scale(1.0 / (12.0 * h));
        assert!((d.scale(0.5 * eps) - o1).max_abs() < 1e-9);
    }
}

#[test]
fn o2_o3_are_lie_derivatives() {
    // o_i = ½ 𝓛_{f V_i} g with f = √(r⁴/(ε⁴+r⁴))
    let eps: f64 = 0.9;
    for x in common::shell_points(13, 30, 0.2, 4.0) {
        let c = Jet2::coords(&x);
        let r2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3];
        let r4 = r2 * r2;
        let f = (r4 / (r4 + eps.powi(4))).sqrt();
        let v = vector_fields_v(&x).unwrap();
        let gj = eh(eps).eval(&x).unwrap();
        for i in [2usize, 3] {
            let w = v[i - 1].map(|vc| vc * f);
            let lie = lie_derivative_sym2(&gj, &vector_jet1(&w)).scale(0.5);
            let oi = o(i, eps).value_at(&x).unwrap();
            assert!((lie - oi).max_abs() < 1e-12, "o{i}: {}", (lie - oi).max_abs());
        }
    }
}

#[test]
fn vector_fields_duality_and_brackets() {
    let v = vector_fields_v(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    for (k, vk) in v.iter().enumerate() {
        for (i, c) in vk.iter().enumerate() {
            assert_eq!(c.value, if i == k + 1 { 1.0 } else { 0.0 });
        }
    }
    for x in common::shell_points(14, 100, 0.1, 5.0) {
        let v = vector_fields_v(&x).unwrap();
        let a = alpha_forms(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..4).map(|k| a[i][k].value * v[j][k].value).sum();
                assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let vj = v.map(|w| vector_jet1(&w));
        // [V1,V2] = −2V3 and cyclic
        for (p, q, s) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let b = lie_bracket(&vj[p], &vj[q]);
            for k in 0..4 {
                assert!((b[k] + 2.0 * v[s][k].value).abs() < 1e-13);
            }
        }
        // 𝓛_{V1}α2 = −2α3
        let l = lie_derivative_form(&a[1], &vj[0]);
        for k in 0..4 {
            assert!((l[k] + 2.0 * a[2][k].value).abs() < 1e-13);
        }
        let l = lie_derivative_form(&a[0], &vj[1]);
        for k in 0..4 {
            assert!((l[k] - 2.0 * a[2][k].value).abs() < 1e-13);
        }
    }
}

#[test]
fn linear_generators_fix_all_model_fields() {
    let sample = common::shell_points(15, 40, 0.2, 3.0);
    let fields: Vec<(&str, Box<dyn Sym2Field>)> = vec![
        ("g", Box::new(eh(1.0))),
        ("ghat", Box::new(EhMetric::hat(EhParams::new(1.0).unwrap()))),
        ("T", Box::new(TensorT::plain())),
        ("That", Box::new(TensorT::hat())),
    ];
    for map in SymmetryMap::linear_generators() {
        assert!(map.is_orthogonal());
        for (name, f) in &fields {
            let d = symmetry_check(f, &map, &sample).unwrap();
            assert!(d <= 1e-12, "{name} under {}: {d}", map.name);
        }
    }
}

#[test]
fn flat_metric_is_invariant_under_collection() {
    let sample = common::shell_points(16, 20, 0.2, 0.5);
    for map in SymmetryMap::collection() {
        assert_eq!(symmetry_check(&Euclidean, &map, &sample).unwrap(), 0.0);
    }
}

#[test]
fn composition_stays_orthogonal() {
    let c = SymmetryMap::collection();
    for a in &c {
        for b in &c {
            assert!(a.compose(b).is_orthogonal());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scaling_covariance(eps in 0.1f64..5.0, x in prop::array::uniform4(-3.0f64..3.0)) {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(r > 0.05);
        let lhs = eh(eps).value_at(&x).unwrap();
        // ε²·(dilation pullback of g_eh,1): the ε² cancels the 1/ε² of the pullback in Cartesian components
        let rhs = eh(1.0).value_at(&x.map(|v| v / eps)).unwrap();
        prop_assert!((lhs - rhs).max_abs() <= 1e-13 * lhs.max_abs(), "{}", (lhs - rhs).max_abs() / lhs.max_abs());
    }

    #[test]
    fn determinant_is_one(eps in 0.1f64..5.0, x in prop::array::uniform4(-3.0f64..3.0)) {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(r > 0.3 * eps);
        let det = eh(eps).value_at(&x).unwrap().determinant();
        prop_assert!((det - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_tensors_are_trace_free(eps in 0.1f64..5.0, i in 1usize..4, x in prop::array::uniform4(-3.0f64..3.0)) {
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(r > 0.05 * eps);
        let g = eh(eps).value_at(&x).unwrap();
        let oi = o(i, eps).value_at(&x).unwrap();
        let tr = ehglue::inner_product(&g, &g, &oi).unwrap();
        prop_assert!(tr.abs() < trace_tolerance(&g, &oi));
    }
}
