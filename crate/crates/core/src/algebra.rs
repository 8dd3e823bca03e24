//! Dense complex matrices, commuting generator families, words and
//! overflow-safe word application.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Magnitude beyond which linear-domain word application is flagged saturated.
pub const SATURATION: f64 = 1e300;

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        ComplexMatrix { dim: n, entries: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(n: usize, c: Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = c;
        }
        m
    }

    pub fn from_diagonal(d: &[Complex64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            m.entries[i * n + i] = v;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        ComplexMatrix { dim: n, entries }
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be `n²`.
    pub fn from_row_major(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidArgument("entry count is not n²"));
        }
        Ok(ComplexMatrix { dim: n, entries })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidArgument("matrix is not square"));
            }
            entries.extend_from_slice(row);
        }
        Ok(ComplexMatrix { dim: n, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ComplexMatrix { dim: self.dim, entries: self.entries.iter().map(|&e| e * c).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.entries)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| f64::max(m, e.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.re.is_finite() && e.im.is_finite())
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        self.entries.iter().enumerate().all(|(idx, e)| idx / n == idx % n || (e.re == 0.0 && e.im == 0.0))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let row = &self.entries[i * n..(i + 1) * n];
                row.iter().zip(v).fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `self^k` by repeated squaring, with a saturation flag.
    pub fn power(&self, mut k: u64) -> (ComplexMatrix, bool) {
        let mut result = ComplexMatrix::identity(self.dim);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
                if saturated(&result.entries) {
                    return (result, true);
                }
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
                if saturated(&base.entries) {
                    return (result, true);
                }
            }
        }
        (result, false)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim;
        assert_eq!(n, rhs.dim, "dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.entries[i * n + l];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rrow = &rhs.entries[l * n..(l + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { dim: n, entries: out }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect();
        ComplexMatrix { dim: self.dim, entries }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect();
        ComplexMatrix { dim: self.dim, entries }
    }
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

fn saturated(v: &[Complex64]) -> bool {
    v.iter().any(|z| !(z.re.abs() <= SATURATION && z.im.abs() <= SATURATION))
}

/// Relative commutator residual `‖AB − BA‖ / (‖A‖‖B‖ + 1)`.
pub fn commutation_residual(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let c = &(a * b) - &(b * a);
    c.frobenius_norm() / (a.frobenius_norm() * b.frobenius_norm() + 1.0)
}

/// A commuting tuple of generators sharing a dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorFamily {
    n: usize,
    generators: Vec<ComplexMatrix>,
    commutation_residual: f64,
    diagonal: Option<Vec<LogDiagonal>>,
}

impl GeneratorFamily {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    pub fn commutation_residual(&self) -> f64 {
        self.commutation_residual
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal.is_some()
    }

    /// Log-domain generators when every generator is diagonal.
    pub fn log_diagonals(&self) -> Option<&[LogDiagonal]> {
        self.diagonal.as_deref()
    }

    pub fn max_norm(&self) -> f64 {
        self.generators.iter().fold(0.0, |m, g| f64::max(m, g.frobenius_norm()))
    }
}

/// Accepts `matrices` as an abelian family when every pairwise residual is at most `tol`.
pub fn verify_commuting(matrices: Vec<ComplexMatrix>, tol: f64) -> Result<GeneratorFamily> {
    let first = matrices.first().ok_or(Error::EmptyFamily)?;
    let n = first.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive"));
    }
    for (index, m) in matrices.iter().enumerate() {
        if m.dim() != n {
            return Err(Error::DimensionMismatch { index, expected: n, found: m.dim() });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    let mut worst = (0, 0, 0.0f64);
    for i in 0..matrices.len() {
        for j in i + 1..matrices.len() {
            let r = commutation_residual(&matrices[i], &matrices[j]);
            if r > worst.2 {
                worst = (i, j, r);
            }
        }
    }
    if worst.2 > tol {
        return Err(Error::NotCommuting { i: worst.0, j: worst.1, residual: worst.2 });
    }
    let diagonal = if matrices.iter().all(ComplexMatrix::is_diagonal) {
        Some(matrices.iter().map(|m| LogDiagonal::from_diagonal(&m.diagonal())).collect())
    } else {
        None
    };
    Ok(GeneratorFamily { n, generators: matrices, commutation_residual: worst.2, diagonal })
}

/// Result of a membership test in `K_{η,r}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMembership {
    pub member: bool,
    pub residual: f64,
}

pub(crate) fn check_partition(partition: &[usize], n: usize) -> Result<()> {
    let sum: usize = partition.iter().sum();
    if sum != n || partition.contains(&0) {
        return Err(Error::BadPartition { sum, n });
    }
    Ok(())
}

/// Tests whether `m` is block diagonal with lower-triangular, constant-diagonal
/// blocks of the given sizes. The residual is the largest violating entry.
pub fn is_in_k(m: &ComplexMatrix, partition: &[usize], tol: f64) -> Result<KMembership> {
    let n = m.dim();
    check_partition(partition, n)?;
    let mut block_of = Vec::with_capacity(n);
    for (k, &size) in partition.iter().enumerate() {
        block_of.extend(core::iter::repeat_n(k, size));
    }
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if block_of[i] != block_of[j] || j > i {
                residual = residual.max(m.get(i, j).norm());
            }
        }
    }
    let mut start = 0;
    for &size in partition {
        let mean = (start..start + size).map(|i| m.get(i, i)).sum::<Complex64>() / size as f64;
        for i in start..start + size {
            residual = residual.max((m.get(i, i) - mean).norm());
        }
        start += size;
    }
    Ok(KMembership { member: residual <= tol, residual })
}

/// Exponent tuple addressing `A₁^{k₁}⋯A_p^{k_p}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    exponents: Vec<u64>,
    total_degree: u64,
}

impl Word {
    pub fn new(exponents: Vec<u64>) -> Self {
        let total_degree = exponents.iter().sum();
        Word { exponents, total_degree }
    }

    pub fn identity(p: usize) -> Self {
        Word::new(vec![0; p])
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn total_degree(&self) -> u64 {
        self.total_degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Exponent-wise sum, the word of the product.
    pub fn compose(&self, other: &Word) -> Word {
        Word::new(self.exponents.iter().zip(&other.exponents).map(|(a, b)| a + b).collect())
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut r = libm::remainder(x, 2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Diagonal matrix stored as logarithms of its entries.
#[derive(Clone, Debug, PartialEq)]
pub struct LogDiagonal {
    log_moduli: Vec<f64>,
    args: Vec<f64>,
}

impl LogDiagonal {
    pub fn new(log_moduli: Vec<f64>, args: Vec<f64>) -> Result<Self> {
        if log_moduli.len() != args.len() {
            return Err(Error::InvalidArgument("log moduli and arguments differ in length"));
        }
        if log_moduli.iter().any(|v| v.is_nan() || *v == f64::INFINITY) || args.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("log moduli must be below +∞ and arguments finite"));
        }
        let args = args.into_iter().map(wrap_angle).collect();
        Ok(LogDiagonal { log_moduli, args })
    }

    pub fn from_diagonal(d: &[Complex64]) -> Self {
        LogDiagonal {
            log_moduli: d.iter().map(|z| libm::log(z.norm())).collect(),
            args: d.iter().map(|z| wrap_angle(libm::atan2(z.im, z.re))).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.log_moduli.len()
    }

    pub fn log_moduli(&self) -> &[f64] {
        &self.log_moduli
    }

    pub fn args(&self) -> &[f64] {
        &self.args
    }

    pub fn entry(&self, i: usize) -> Complex64 {
        from_polar_log(self.log_moduli[i], self.args[i])
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let d: Vec<Complex64> = (0..self.n()).map(|i| self.entry(i)).collect();
        ComplexMatrix::from_diagonal(&d)
    }

    pub fn compose(&self, other: &LogDiagonal) -> LogDiagonal {
        LogDiagonal {
            log_moduli: self.log_moduli.iter().zip(&other.log_moduli).map(|(a, b)| a + b).collect(),
            args: self.args.iter().zip(&other.args).map(|(a, b)| wrap_angle(a + b)).collect(),
        }
    }

    pub fn pow(&self, k: u64) -> LogDiagonal {
        let kf = k as f64;
        LogDiagonal {
            log_moduli: self.log_moduli.iter().map(|&l| scale_log(l, kf)).collect(),
            args: self.args.iter().map(|&a| wrap_angle(a * kf)).collect(),
        }
    }

    /// Applies the diagonal to `v` without forming the entries.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter()
            .enumerate()
            .map(|(i, z)| {
                if z.re == 0.0 && z.im == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                from_polar_log(
                    self.log_moduli[i] + libm::log(z.norm()),
                    self.args[i] + libm::atan2(z.im, z.re),
                )
            })
            .collect()
    }
}

fn scale_log(l: f64, k: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        l * k
    }
}

pub(crate) fn from_polar_log(log_modulus: f64, arg: f64) -> Complex64 {
    let r = libm::exp(log_modulus);
    Complex64::new(r * libm::cos(arg), r * libm::sin(arg))
}

/// Image of a vector under a word.
#[derive(Clone, Debug, PartialEq)]
pub struct WordImage {
    pub vector: Vec<Complex64>,
    pub saturated: bool,
}

/// Log-domain form of a diagonal family's word.
pub fn diagonal_word(gens: &[LogDiagonal], w: &Word) -> LogDiagonal {
    let n = gens[0].n();
    let mut lm = vec![0.0; n];
    let mut args = vec![0.0; n];
    for (g, &k) in gens.iter().zip(w.exponents()) {
        if k == 0 {
            continue;
        }
        let kf = k as f64;
        for i in 0..n {
            lm[i] += scale_log(g.log_moduli[i], kf);
            args[i] += g.args[i] * kf;
        }
    }
    LogDiagonal { log_moduli: lm, args: args.into_iter().map(wrap_angle).collect() }
}

/// Computes `(A₁^{k₁}⋯A_p^{k_p})·v`.
///
/// Diagonal families work per coordinate and switch to the log domain
/// whenever a linear-domain partial product would leave `[1e−300, 1e300]`.
pub fn word_apply(family: &GeneratorFamily, w: &Word, v: &[Complex64]) -> WordImage {
    assert_eq!(w.len(), family.p(), "word length differs from generator count");
    assert_eq!(v.len(), family.n(), "vector length differs from dimension");
    if family.is_diagonal() {
        let mut vector = alloc::vec![Complex64::new(0.0, 0.0); v.len()];
        let saturated = diagonal_apply_into(family, w.exponents(), v, &mut vector);
        return WordImage { vector, saturated };
    }
    word_apply_generic(family, w, v)
}

/// Diagonal word application into `out`; returns the saturation flag.
pub(crate) fn diagonal_apply_into(family: &GeneratorFamily, exponents: &[u64], v: &[Complex64], out: &mut [Complex64]) -> bool {
    let gens = family.log_diagonals().expect("diagonal family");
    let mut saturated = false;
    for (l, &z) in v.iter().enumerate() {
        let linear = family
            .generators()
            .iter()
            .zip(exponents)
            .try_fold(z, |acc, (g, &k)| scalar_power(g.get(l, l), k).map(|pw| acc * pw).filter(|x| in_range(*x)));
        out[l] = match linear {
            Some(x) => x,
            None => log_apply(gens, exponents, l, z),
        };
        saturated |= !(out[l].re.is_finite() && out[l].im.is_finite());
    }
    saturated
}

fn log_apply(gens: &[LogDiagonal], exponents: &[u64], l: usize, z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return z;
    }
    let mut lm = libm::log(z.norm());
    let mut arg = libm::atan2(z.im, z.re);
    for (g, &k) in gens.iter().zip(exponents) {
        if k != 0 {
            lm += g.log_moduli[l] * k as f64;
            arg += g.args[l] * k as f64;
        }
    }
    from_polar_log(lm, arg)
}

fn in_range(z: Complex64) -> bool {
    let m = z.norm();
    m == 0.0 || (m > 1e-300 && m < SATURATION)
}

/// `λ^k` by repeated squaring, `None` once a partial product leaves the safe range.
fn scalar_power(lambda: Complex64, mut k: u64) -> Option<Complex64> {
    let mut result = Complex64::new(1.0, 0.0);
    let mut base = lambda;
    while k > 0 {
        if k & 1 == 1 {
            result *= base;
            if !in_range(result) {
                return None;
            }
        }
        k >>= 1;
        if k > 0 {
            base *= base;
            if !in_range(base) {
                return None;
            }
        }
    }
    Some(result)
}

/// Linear-domain word application by repeated squaring.
pub fn word_apply_generic(family: &GeneratorFamily, w: &Word, v: &[Complex64]) -> WordImage {
    let mut out = v.to_vec();
    for (g, &k) in family.generators().iter().zip(w.exponents()).rev() {
        if k == 0 {
            continue;
        }
        let (pw, sat) = g.power(k);
        out = pw.mul_vec(&out);
        if sat || saturated(&out) {
            return WordImage { vector: out, saturated: true };
        }
    }
    WordImage { vector: out, saturated: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_commutes_with_anything() {
        let a = ComplexMatrix::from_fn(3, |i, j| c((i * 3 + j) as f64, 0.5 * j as f64));
        let fam = verify_commuting(alloc::vec![ComplexMatrix::identity(3), a], 1e-10).unwrap();
        assert_eq!(fam.commutation_residual(), 0.0);
    }

    #[test]
    fn non_commuting_pair_is_rejected() {
        let a = ComplexMatrix::from_diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let mut b = ComplexMatrix::zeros(2);
        b.set(0, 1, c(1.0, 0.0));
        let raw = (&(&a * &b) - &(&b * &a)).frobenius_norm();
        assert_eq!(raw, 1.0);
        match verify_commuting(alloc::vec![a, b], 1e-10) {
            Err(Error::NotCommuting { i: 0, j: 1, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let r = verify_commuting(alloc::vec![ComplexMatrix::identity(2), ComplexMatrix::identity(3)], 1e-10);
        assert!(matches!(r, Err(Error::DimensionMismatch { index: 1, expected: 2, found: 3 })));
    }

    #[test]
    fn k_membership_examples() {
        let t = is_in_k(&ComplexMatrix::identity(4), &[1, 1, 1, 1], 1e-9).unwrap();
        assert!(t.member);
        assert_eq!(t.residual, 0.0);
        let m = ComplexMatrix::from_rows(&[alloc::vec![c(3.0, 0.0), c(0.0, 0.0)], alloc::vec![c(1.0, 0.0), c(3.0, 0.0)]]).unwrap();
        assert!(is_in_k(&m, &[2], 1e-9).unwrap().member);
        assert!(!is_in_k(&m, &[1, 1], 1e-9).unwrap().member);
        let m = ComplexMatrix::from_rows(&[alloc::vec![c(3.0, 0.0), c(0.0, 0.0)], alloc::vec![c(1.0, 0.0), c(4.0, 0.0)]]).unwrap();
        assert!(!is_in_k(&m, &[2], 1e-9).unwrap().member);
        assert!(matches!(is_in_k(&m, &[3], 1e-9), Err(Error::BadPartition { sum: 3, n: 2 })));
    }

    #[test]
    fn small_word_application() {
        let fam = verify_commuting(alloc::vec![ComplexMatrix::from_diagonal(&[c(2.0, 0.0), c(1.0, 0.0)])], 1e-10).unwrap();
        let out = word_apply(&fam, &Word::new(alloc::vec![3]), &[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(!out.saturated);
        assert_eq!(out.vector, alloc::vec![c(8.0, 0.0), c(1.0, 0.0)]);
        let generic = word_apply_generic(&fam, &Word::new(alloc::vec![3]), &[c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(generic.vector, alloc::vec![c(8.0, 0.0), c(1.0, 0.0)]);
        let v = [c(0.3, -1.0), c(2.0, 0.5)];
        assert_eq!(word_apply(&fam, &Word::identity(1), &v).vector, v.to_vec());
    }

    #[test]
    fn large_exponent_saturates_only_in_linear_domain() {
        let fam = verify_commuting(alloc::vec![ComplexMatrix::from_diagonal(&[c(2.0, 0.0)])], 1e-10).unwrap();
        let w = Word::new(alloc::vec![2000]);
        let ld = diagonal_word(fam.log_diagonals().unwrap(), &w);
        assert_eq!(ld.log_moduli()[0], 2000.0 * core::f64::consts::LN_2);
        assert!(word_apply_generic(&fam, &w, &[c(1.0, 0.0)]).saturated);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
    }
}
