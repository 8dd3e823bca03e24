#![allow(dead_code)]

use hypercyc_core::algebra::ComplexMatrix;
use hypercyc_core::Complex64;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    c(gauss(rng), gauss(rng)) / std::f64::consts::SQRT_2
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| cgauss(rng)).collect()
}

pub fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = rng.random_range(1..=left);
        out.push(s);
        left -= s;
    }
    out
}

fn to_cm(m: &DMatrix<Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), |i, j| m[(i, j)])
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| cgauss(rng));
    g.qr().q()
}

/// Random invertible matrix with condition number in `[1, max_cond]`, and its inverse.
pub fn random_conditioned(rng: &mut ChaCha8Rng, n: usize, max_cond: f64) -> (ComplexMatrix, ComplexMatrix) {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let target = max_cond.ln() * rng.random::<f64>();
    let s: Vec<f64> = (0..n)
        .map(|i| if n == 1 { 1.0 } else { (target * i as f64 / (n - 1) as f64).exp() })
        .collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, s.iter().map(|&x| c(x, 0.0))));
    let dinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, s.iter().map(|&x| c(1.0 / x, 0.0))));
    let p = &u * d * v.adjoint();
    let pinv = &v * dinv * u.adjoint();
    (to_cm(&p), to_cm(&pinv))
}

/// `p` commuting elements of `K_{η,r}`, each block a polynomial in one random nilpotent matrix.
pub fn random_k_family(rng: &mut ChaCha8Rng, partition: &[usize], p: usize) -> Vec<ComplexMatrix> {
    let n: usize = partition.iter().sum();
    let mut gens = vec![ComplexMatrix::zeros(n); p];
    let mut off = 0;
    for &size in partition {
        let nil = ComplexMatrix::from_fn(size, |i, j| if i > j { cgauss(rng) } else { c(0.0, 0.0) });
        let mut powers = vec![ComplexMatrix::identity(size)];
        for t in 1..size {
            powers.push(&powers[t - 1] * &nil);
        }
        for g in gens.iter_mut() {
            let mu = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let mut block = powers[0].scale(mu);
            for (t, pw) in powers.iter().enumerate().skip(1) {
                let coeff = if t == 1 { c(1.0, 0.0) + cgauss(rng) * 0.5 } else { cgauss(rng) };
                block = &block + &pw.scale(coeff);
            }
            for i in 0..size {
                for j in 0..size {
                    g.set(off + i, off + j, block.get(i, j));
                }
            }
        }
        off += size;
    }
    gens
}

pub fn conjugate(p: &ComplexMatrix, pinv: &ComplexMatrix, gens: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    gens.iter().map(|g| &(p * g) * pinv).collect()
}
