//! Shared toy instances and brute-force oracles.
#![allow(dead_code)]

use memctl_core::bmi::BnbOutcome;

pub struct Toy {
    pub vertices: Vec<(f64, f64)>,
    pub k: (f64, f64),
}

pub fn toy_instances() -> Vec<Toy> {
    vec![
        Toy { vertices: vec![(-1.0, 1.0)], k: (0.5, 1.0) },
        Toy { vertices: vec![(-1.0, 1.0), (0.5, 2.0)], k: (0.5, 2.0) },
        Toy { vertices: vec![(1.0, 1.0), (2.0, 0.5)], k: (3.0, 6.0) },
        // No gain in the box stabilizes: the optimum sits on P = mu_p.
        Toy { vertices: vec![(3.0, 1.0)], k: (1.0, 2.0) },
    ]
}

/// `min over P, K of max_i 2 P (a_i - b_i K_i)` on a 400-point grid per axis.
pub fn scalar_grid(t: &Toy, mu_p: f64) -> f64 {
    let n = 400;
    let ps: Vec<f64> = (0..n).map(|i| mu_p + (1.0 - mu_p) * i as f64 / (n - 1) as f64).collect();
    let ks: Vec<f64> = (0..n).map(|i| t.k.0 + (t.k.1 - t.k.0) * i as f64 / (n - 1) as f64).collect();
    let mut best = f64::INFINITY;
    for &p in &ps {
        match t.vertices.len() {
            1 => {
                let (a, b) = t.vertices[0];
                for &k in &ks {
                    best = best.min(2.0 * p * (a - b * k));
                }
            }
            _ => {
                let (a1, b1) = t.vertices[0];
                let (a2, b2) = t.vertices[1];
                for &k1 in &ks {
                    let v1 = 2.0 * p * (a1 - b1 * k1);
                    for &k2 in &ks {
                        best = best.min(v1.max(2.0 * p * (a2 - b2 * k2)));
                    }
                }
            }
        }
    }
    best
}

/// Panics unless the global bounds are monotone and every node is sandwiched.
pub fn check_bounds(out: &BnbOutcome) {
    for w in out.bounds.windows(2) {
        assert!(w[1].0 >= w[0].0 - 1e-9, "lower bound decreased: {:?}", w);
        assert!(w[1].1 <= w[0].1 + 1e-9, "upper bound increased: {:?}", w);
    }
    for &(l, u) in &out.bounds {
        assert!(l <= u + 1e-9);
    }
    for &(l, u) in &out.node_bounds {
        assert!(l <= u + 1e-6, "node sandwich {l} > {u}");
    }
}
