#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use torus_lasso::{SystemModel, Tube};

/// Uniform point in the closed ball; one draw in eight lands on the sphere,
/// pulled in by a relative 1e-12 so rounding keeps it inside.
pub fn sample_in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let dir: Vec<f64> = loop {
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            break d.iter().map(|v| v / norm).collect();
        }
    };
    let scale =
        if rng.random_range(0..8) == 0 { 1.0 - 1e-12 } else { rng.random_range(0.0..1.0f64).powf(1.0 / n as f64) };
    center.iter().zip(&dir).map(|(c, d)| c + radius * scale * d).collect()
}

/// Random disturbance value in the system's set.
pub fn sample_w(rng: &mut ChaCha8Rng, sys: &SystemModel) -> Vec<f64> {
    let (lo, hi) = sys.disturbance.bounds();
    lo.iter().zip(&hi).map(|(l, h)| if h > l { rng.random_range(*l..=*h) } else { *l }).collect()
}

/// Classical RK4 over `[0, tau]` with `substeps` steps and `w` held constant.
pub fn rk4(sys: &SystemModel, x: &[f64], w: &[f64], tau: f64, substeps: usize) -> Vec<f64> {
    let h = tau / substeps as f64;
    let f = |y: &[f64]| sys.eval(y, w).expect("oracle left the domain");
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(p, q)| p + a * q).collect() };
    let mut y = x.to_vec();
    for _ in 0..substeps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, h / 2.0));
        let k3 = f(&axpy(&y, &k2, h / 2.0));
        let k4 = f(&axpy(&y, &k3, h));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest `distance - radius` over the tube's grid times for one disturbed trajectory.
pub fn worst_excess(sys: &SystemModel, tube: &Tube, y0: Vec<f64>, rng: &mut ChaCha8Rng, substeps: usize) -> f64 {
    let mut y = y0;
    let mut worst = dist(&y, &tube.balls[0].center) - tube.balls[0].radius;
    for b in &tube.balls[1..] {
        let w = sample_w(rng, sys);
        y = rk4(sys, &y, &w, tube.tau, substeps);
        worst = worst.max(dist(&y, &b.center) - b.radius);
    }
    worst
}
