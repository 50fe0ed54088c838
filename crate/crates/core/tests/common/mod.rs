#![allow(dead_code)]

use ehglue::Point4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector<R: Rng>(rng: &mut R) -> Point4 {
    loop {
        let v: Point4 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// Points with radius uniform in [r0, r1].
pub fn shell_points(seed: u64, n: usize, r0: f64, r1: f64) -> Vec<Point4> {
    let mut g = rng(seed);
    (0..n)
        .map(|_| {
            let u = unit_vector(&mut g);
            let r = g.gen_range(r0..r1);
            u.map(|x| x * r)
        })
        .collect()
}

pub fn norm(x: &Point4) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
