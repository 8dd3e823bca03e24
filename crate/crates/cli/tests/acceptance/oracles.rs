use hypercyc_core::algebra::ComplexMatrix;
use hypercyc_core::Complex64;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::families::{c, gauss, norm};

/// Every product of at most `max_degree` generators, as generator index lists.
fn words(p: usize, max_degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for w in &frontier {
            for j in 0..p {
                let mut v: Vec<usize> = w.clone();
                v.push(j);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Seeds `(W − μ_W I)e_i`, `i < n−1`, over every product `W` of at most `max_degree` generators.
pub fn f_seeds(gens: &[ComplexMatrix], max_degree: usize) -> Vec<Vec<Complex64>> {
    let n = gens[0].dim();
    let mut seeds = Vec::new();
    for w in words(gens.len(), max_degree) {
        let mut m = ComplexMatrix::identity(n);
        for &j in &w {
            m = &m * &gens[j];
        }
        let mu = m.get(0, 0);
        for i in 0..n.saturating_sub(1) {
            let mut col: Vec<Complex64> = (0..n).map(|r| m.get(r, i)).collect();
            col[i] -= mu;
            seeds.push(col);
        }
    }
    seeds
}

/// Derivative-free minimization of `‖W x̃ − y‖` over the ball from `samples` evaluations:
/// half uniform over the ball and its boundary sphere, half random local
/// moves around the incumbent with a shrinking step, projected back onto the ball.
pub fn monte_carlo(rng: &mut ChaCha8Rng, w: &ComplexMatrix, x: &[Complex64], delta: f64, y: &[Complex64], samples: usize) -> f64 {
    let n = x.len();
    let eval = |xt: &[Complex64]| norm(&w.mul_vec(xt).iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
    let project = |xt: Vec<Complex64>| {
        let off: Vec<Complex64> = xt.iter().zip(x).map(|(a, b)| a - b).collect();
        let len = norm(&off);
        if len <= delta {
            xt
        } else {
            x.iter().zip(&off).map(|(b, o)| b + o * (delta / len)).collect()
        }
    };
    let mut best = (f64::INFINITY, x.to_vec());
    let global = samples / 2;
    for s in 0..global {
        let dir: Vec<Complex64> = (0..n).map(|_| c(gauss(rng), gauss(rng))).collect();
        let len = norm(&dir);
        let radius = if s % 2 == 0 { delta } else { delta * rng.random::<f64>().powf(1.0 / (2 * n) as f64) };
        let xt: Vec<Complex64> = x.iter().zip(&dir).map(|(a, d)| a + d * (radius / len)).collect();
        let d = eval(&xt);
        if d < best.0 {
            best = (d, xt);
        }
    }
    let mut step = 0.3 * delta;
    for s in 0..samples - global {
        if s > 0 && s % 2500 == 0 {
            step *= 0.6;
        }
        let xt = project(best.1.iter().map(|z| z + c(gauss(rng), gauss(rng)) * step).collect());
        let d = eval(&xt);
        if d < best.0 {
            best = (d, xt);
        }
    }
    best.0
}

/// Orthonormal basis of the span of `vectors`, singular values below `1e-9·σ_max` dropped.
pub fn orthonormal_basis(vectors: &[Vec<Complex64>], n: usize) -> DMatrix<Complex64> {
    if vectors.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let svd = m.svd(true, false);
    let u = svd.u.unwrap();
    let max = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| max > 0.0 && svd.singular_values[i] > 1e-9 * max).collect();
    DMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])])
}

/// Sine of the largest principal angle between two subspaces of equal dimension.
pub fn max_angle_sine(q1: &DMatrix<Complex64>, q2: &DMatrix<Complex64>) -> f64 {
    if q1.ncols() == 0 {
        return 0.0;
    }
    let residual = q2 - q1 * (q1.adjoint() * q2);
    residual.singular_values().max()
}
