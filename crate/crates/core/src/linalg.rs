use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::ComplexMatrix;
use crate::{Error, Result};

pub(crate) type CMat = DMatrix<Complex64>;

pub(crate) fn to_na(m: &ComplexMatrix) -> CMat {
    let n = m.dim();
    CMat::from_row_slice(n, n, m.entries())
}

pub(crate) fn from_na(m: &CMat) -> ComplexMatrix {
    assert_eq!(m.nrows(), m.ncols(), "matrix is not square");
    ComplexMatrix::from_fn(m.nrows(), |i, j| m[(i, j)])
}

/// Singular value decomposition with singular values sorted descending.
pub(crate) struct SortedSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    /// Right singular vectors as columns, full `ncols × ncols` when requested.
    pub v: CMat,
}

/// One-sided Jacobi SVD.
///
/// Works on the columns of `m` (or of `mᴴ` when `m` is wide) until every pair
/// is orthogonal to working precision.
pub(crate) fn svd(m: &CMat) -> Result<SortedSvd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(SortedSvd { u: CMat::zeros(rows, 0), s: Vec::new(), v: CMat::zeros(cols, 0) });
    }
    if rows < cols {
        let t = svd(&m.adjoint())?;
        return Ok(SortedSvd { u: t.v, s: t.s, v: t.u });
    }
    let mut a = m.clone();
    let mut v = CMat::identity(cols, cols);
    let threshold = rows as f64 * f64::EPSILON;
    let negligible = f64::EPSILON * frob(m);
    let floor = negligible * negligible;
    let mut converged = false;
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a.column(p).iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a.column(q).iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = a.column(p).iter().zip(a.column(q).iter()).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= threshold * libm::sqrt(alpha * beta) || alpha.min(beta) <= floor {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut a, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Decomposition("SVD"));
    }
    let norms: Vec<f64> = (0..cols).map(|j| libm::sqrt(a.column(j).iter().map(|z| z.norm_sqr()).sum())).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(core::cmp::Ordering::Equal));
    let mut u = CMat::zeros(rows, cols);
    let mut sv = CMat::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        if norms[src] > negligible {
            u.set_column(dst, &(a.column(src) / Complex64::new(norms[src], 0.0)));
        }
        sv.set_column(dst, &v.column(src));
        s.push(norms[src]);
    }
    complete_orthonormal(&mut u, s.iter().take_while(|&&x| x > negligible).count());
    Ok(SortedSvd { u, s, v: sv })
}

/// `[a_p, a_q] ← [a_p, e^{-iφ}a_q]·[[c, s], [−s, c]]`.
fn rotate(m: &mut CMat, p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let back = phase.conj();
    for i in 0..m.nrows() {
        let x = m[(i, p)];
        let y = m[(i, q)] * back;
        m[(i, p)] = x * c - y * s;
        m[(i, q)] = x * s + y * c;
    }
}

/// Fills columns `from..` with an orthonormal completion of the first `from`.
fn complete_orthonormal(u: &mut CMat, from: usize) {
    let rows = u.nrows();
    for next in from..u.ncols() {
        let mut best = nalgebra::DVector::<Complex64>::zeros(rows);
        let mut best_norm = 0.0;
        for candidate in 0..rows {
            let mut w = nalgebra::DVector::<Complex64>::zeros(rows);
            w[candidate] = Complex64::new(1.0, 0.0);
            for _ in 0..2 {
                for j in 0..next {
                    let proj = u.column(j).dotc(&w);
                    w -= u.column(j) * proj;
                }
            }
            let norm = w.norm();
            if norm > best_norm {
                best_norm = norm;
                best = w;
            }
        }
        u.set_column(next, &(best / Complex64::new(best_norm, 0.0)));
    }
}

/// The `count` right singular vectors of `m` with the smallest singular values.
pub(crate) fn smallest_right_vectors(m: &CMat, count: usize) -> Result<CMat> {
    let (rows, cols) = m.shape();
    let padded;
    let src = if rows < cols {
        let mut p = CMat::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    let d = svd(src)?;
    Ok(d.v.columns(cols - count, count).into_owned())
}

/// Orthonormal basis of the column span, keeping singular values above `rel · σ_max`.
pub(crate) fn orth(cols: &CMat, rel: f64) -> Result<(CMat, f64)> {
    let n = cols.nrows();
    if cols.ncols() == 0 {
        return Ok((CMat::zeros(n, 0), 0.0));
    }
    let d = svd(cols)?;
    let smax = d.s.first().copied().unwrap_or(0.0);
    if !(smax > 0.0) {
        return Ok((CMat::zeros(n, 0), smax));
    }
    let r = d.s.iter().filter(|&&s| s > rel * smax).count();
    Ok((d.u.columns(0, r).into_owned(), smax))
}

pub(crate) fn condition_number(m: &CMat) -> Result<f64> {
    let d = svd(m)?;
    let smax = d.s.first().copied().unwrap_or(0.0);
    let smin = d.s.last().copied().unwrap_or(0.0);
    Ok(if smin > 0.0 { smax / smin } else { f64::INFINITY })
}

pub(crate) fn frob(m: &CMat) -> f64 {
    libm::sqrt(m.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

pub(crate) fn vec_norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>())
}
