mod common;

use std::f64::consts::PI;

use ehglue::eh::SymmetryMap;
use ehglue::heat::*;
use ehglue::Point4;
use proptest::prelude::*;

fn cube_point(seed: u64, k: usize) -> Vec<Point4> {
    use rand::Rng;
    let mut g = common::rng(seed);
    (0..k).map(|_| std::array::from_fn(|_| g.gen_range(-0.5..0.5))).collect()
}

fn both(x: Point4, x0: Point4, t: f64, kernel: Kernel) -> (f64, f64) {
    let q = KernelQuery::new(x, x0, t);
    let f = match kernel {
        Kernel::Plus => gamma_plus,
        Kernel::Minus => gamma_minus,
    };
    (
        f(&q.with_method(Method::Direct)).unwrap(),
        f(&q.with_method(Method::Dual)).unwrap(),
    )
}

#[test]
fn direct_and_dual_agree_at_switch_time() {
    let pts = cube_point(1, 40);
    for w in pts.windows(2) {
        for kernel in [Kernel::Plus, Kernel::Minus] {
            let (d, p) = both(w[0], w[1], T_STAR, kernel);
            assert!((d - p).abs() <= 1e-12 * d.abs().max(1.0), "{kernel:?}: {d} vs {p}");
        }
    }
}

#[test]
fn direct_and_dual_agree_over_a_range_of_times() {
    for t in [0.05, 0.1, 0.5, 1.0] {
        for w in cube_point(2, 10).windows(2) {
            let (d, p) = both(w[0], w[1], t, Kernel::Plus);
            assert!((d - p).abs() <= 1e-11 * d.abs().max(1.0), "t={t}: {d} vs {p}");
        }
    }
}

#[test]
fn auto_switches_at_t_star() {
    assert_eq!(Method::Auto.resolve(0.2499), Method::Direct);
    assert_eq!(Method::Auto.resolve(T_STAR), Method::Dual);
    assert_eq!(Method::Dual.resolve(0.01), Method::Dual);
}

#[test]
fn cutoffs_follow_the_tail_bounds() {
    assert_eq!(direct_cutoff(0.25), 8);
    assert!(direct_cutoff(1.0) > direct_cutoff(0.25));
    assert!(dual_cutoff(0.25) <= 8);
}

#[test]
fn plus_kernel_equilibrates_by_t_one() {
    for x in cube_point(3, 50) {
        let v = gamma_plus(&KernelQuery::new(x, [0.0; 4], 1.0)).unwrap();
        assert!((v - 1.0).abs() <= 1e-12);
        let m = gamma_minus(&KernelQuery::new(x, [0.1, -0.2, 0.3, 0.0], 1.0)).unwrap();
        assert!(m.abs() <= 1e-12);
    }
}

#[test]
fn small_time_limit_is_the_euclidean_kernel() {
    let x = [0.1, 0.2, -0.3, 0.05];
    for t in [1e-3, 1e-4] {
        let v = gamma_plus(&KernelQuery::new(x, x, t)).unwrap();
        assert!((v * (4.0 * PI * t).powi(2) - 1.0).abs() < 1e-12, "t={t}");
    }
}

#[test]
fn minus_kernel_flips_under_odd_translations() {
    for x in cube_point(4, 20) {
        let x0 = [0.2, 0.1, -0.1, 0.3];
        for a in [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 0.0], [0.0, -3.0, 0.0, 0.0]] {
            let xa = [x[0] + a[0], x[1] + a[1], x[2] + a[2], x[3] + a[3]];
            for t in [0.1, 0.4] {
                for m in [Method::Direct, Method::Dual] {
                    let g = gamma_minus(&KernelQuery::new(x, x0, t).with_method(m)).unwrap();
                    let ga = gamma_minus(&KernelQuery::new(xa, x0, t).with_method(m)).unwrap();
                    assert!((g + ga).abs() <= 1e-13 * g.abs().max(1.0));
                }
            }
        }
    }
}

#[test]
fn kernels_are_invariant_under_affine_generators() {
    let pts = cube_point(5, 20);
    for map in SymmetryMap::affine_generators() {
        for w in pts.windows(2) {
            for t in [0.1, 0.3] {
                let q = KernelQuery::new(w[0], w[1], t);
                let qm = KernelQuery::new(map.apply(&w[0]), map.apply(&w[1]), t);
                for f in [gamma_plus, gamma_minus] {
                    let (a, b) = (f(&q).unwrap(), f(&qm).unwrap());
                    assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0), "{}: {a} vs {b}", map.name);
                }
            }
        }
    }
}

#[test]
fn semigroup_by_grid_convolution() {
    // (Γ₊(t) * Γ₊(s))(x) = Γ₊(t+s)(x); the periodic trapezoid rule on 16⁴ points is spectrally accurate
    let (t, s) = (0.5, 0.6);
    let n: usize = 16;
    let z: Vec<Point4> = (0..n * n * n * n)
        .map(|k| std::array::from_fn(|i| -0.5 + ((k / n.pow(i as u32)) % n) as f64 / n as f64))
        .collect();
    let w = 1.0 / z.len() as f64;
    for x in cube_point(6, 4) {
        let conv: f64 = z
            .iter()
            .map(|zj| {
                gamma_plus(&KernelQuery::new(x, *zj, t)).unwrap() * gamma_plus(&KernelQuery::new(*zj, [0.0; 4], s)).unwrap()
            })
            .sum::<f64>()
            * w;
        let direct = gamma_plus(&KernelQuery::new(x, [0.0; 4], t + s)).unwrap();
        assert!((conv - direct).abs() <= 1e-6, "{conv} vs {direct}");
    }
}

#[test]
fn decay_rates_match_the_spectral_gap() {
    let times: Vec<f64> = (0..7).map(|k| 0.3 + 0.2 * k as f64).collect();
    for kernel in [DecayKernel::PlusMinusOne, DecayKernel::Minus] {
        let scan = decay_rate_scan(kernel, &times, 17).unwrap();
        let target = -4.0 * PI * PI;
        assert!(((scan.rate - target) / target).abs() <= 0.05, "{kernel:?}: {}", scan.rate);
        assert_eq!(scan.truncated, 0);
    }
}

#[test]
fn sup_grid_is_resolved() {
    for kernel in [DecayKernel::PlusMinusOne, DecayKernel::Minus] {
        for t in [0.3, 1.0] {
            let a = sup_on_grid(kernel, t, 17).unwrap();
            let b = sup_on_grid(kernel, t, 33).unwrap();
            assert!((a - b).abs() <= 0.01 * b, "{kernel:?} t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn plus_minus_one_has_no_cancellation() {
    let x = [0.25, 0.0, 0.1, -0.4];
    let t = 1.5;
    let v = gamma_plus_minus_one(&x, &[0.0; 4], t).unwrap();
    let leading: f64 = (0..4).map(|i| 2.0 * (2.0 * PI * x[i]).cos()).sum::<f64>() * (-4.0 * PI * PI * t).exp();
    assert!(((v - leading) / leading).abs() < 1e-10, "{v} vs {leading}");
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(gamma_plus(&KernelQuery::new([0.0; 4], [0.0; 4], 0.0)).is_err());
    assert!(gamma_minus(&KernelQuery::new([0.0; 4], [0.0; 4], -1.0)).is_err());
    assert!(decay_rate_scan(DecayKernel::Minus, &[0.1, 0.5], 9).is_err());
    assert!(decay_rate_scan(DecayKernel::Minus, &[0.5], 9).is_err());
    assert!(Method::parse("fourier").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plus_is_positive_and_dominates_minus(
        x in prop::array::uniform4(-0.5f64..0.5),
        x0 in prop::array::uniform4(-0.5f64..0.5),
        t in 0.01f64..2.0,
    ) {
        let q = KernelQuery::new(x, x0, t);
        let p = gamma_plus(&q).unwrap();
        let m = gamma_minus(&q).unwrap();
        prop_assert!(p > 0.0);
        prop_assert!(m.abs() <= p * (1.0 + 1e-12));
    }

    #[test]
    fn kernels_depend_on_the_difference_only(
        x in prop::array::uniform4(-0.5f64..0.5),
        s in prop::array::uniform4(-0.5f64..0.5),
        t in 0.05f64..1.0,
    ) {
        let q = KernelQuery::new(x, [0.0; 4], t);
        let y: Point4 = std::array::from_fn(|i| x[i] + s[i]);
        let qs = KernelQuery::new(y, s, t);
        let a = gamma_plus(&q).unwrap();
        let b = gamma_plus(&qs).unwrap();
        prop_assert!((a - b).abs() <= 1e-11 * a);
    }
}
