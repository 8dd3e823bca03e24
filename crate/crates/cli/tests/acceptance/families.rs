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

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
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

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| cgauss(rng)).qr().q()
}

/// Random invertible matrix with condition number in `[1, max_cond]`, and its inverse.
pub fn random_conditioned(rng: &mut ChaCha8Rng, n: usize, max_cond: f64) -> (ComplexMatrix, ComplexMatrix) {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let target = max_cond.ln() * rng.random::<f64>();
    let s: Vec<f64> = (0..n).map(|i| if n == 1 { 1.0 } else { (target * i as f64 / (n - 1) as f64).exp() }).collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, s.iter().map(|&x| c(x, 0.0))));
    let dinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, s.iter().map(|&x| c(1.0 / x, 0.0))));
    (to_cm(&(&u * d * v.adjoint())), to_cm(&(&v * dinv * u.adjoint())))
}

/// `p` commuting elements of `K_{η,r}`, each block a polynomial in one random nilpotent matrix.
pub fn random_k_family(rng: &mut ChaCha8Rng, partition: &[usize], p: usize) -> Vec<ComplexMatrix> {
    let n: usize = partition.iter().sum();
    let mut gens = vec![ComplexMatrix::zeros(n); p];
    let mut off = 0;
    for &size in partition {
        let nil = ComplexMatrix::from_fn(size, |i, j| if i > j { cgauss(rng) } else { c(0.0, 0.0) });
        let powers = powers(&nil);
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

/// Commuting lower-triangular family `μ_j I + Σ_t c_{jt} Nᵗ` with some coefficients zeroed,
/// so `F_G` can be rank deficient.
pub fn sparse_block_family(rng: &mut ChaCha8Rng, size: usize, p: usize) -> Vec<ComplexMatrix> {
    let nil = ComplexMatrix::from_fn(size, |i, j| if i > j && rng.random_bool(0.7) { cgauss(rng) } else { c(0.0, 0.0) });
    let powers = powers(&nil);
    (0..p)
        .map(|_| {
            let mu = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let mut m = powers[0].scale(mu);
            for pw in powers.iter().skip(1) {
                if rng.random_bool(0.5) {
                    m = &m + &pw.scale(cgauss(rng));
                }
            }
            m
        })
        .collect()
}

fn powers(nil: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let size = nil.dim();
    let mut out = vec![ComplexMatrix::identity(size)];
    for t in 1..size {
        out.push(&out[t - 1] * nil);
    }
    out
}

/// Block-diagonal assembly of per-block families.
pub fn assemble(blocks: &[Vec<ComplexMatrix>]) -> Vec<ComplexMatrix> {
    let n: usize = blocks.iter().map(|b| b[0].dim()).sum();
    let mut out = vec![ComplexMatrix::zeros(n); blocks[0].len()];
    let mut off = 0;
    for b in blocks {
        let d = b[0].dim();
        for (g, m) in out.iter_mut().zip(b) {
            for i in 0..d {
                for j in 0..d {
                    g.set(off + i, off + j, m.get(i, j));
                }
            }
        }
        off += d;
    }
    out
}

pub fn conjugate(p: &ComplexMatrix, pinv: &ComplexMatrix, gens: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    gens.iter().map(|g| &(p * g) * pinv).collect()
}
