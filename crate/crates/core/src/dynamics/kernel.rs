use alloc::vec::Vec;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::algebra::{ComplexMatrix, SATURATION};
use crate::linalg;
use crate::Result;

/// Closest approach of `W·B̄(x, δ)` to `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallDistance {
    pub distance: f64,
    pub minimizer: Vec<Complex64>,
}

/// `min_{‖x̃−x‖≤δ} ‖W·x̃ − y‖` via the SVD of `W` and a scalar root find.
pub fn distance_to_ball_image(w: &ComplexMatrix, x: &[Complex64], delta: f64, y: &[Complex64]) -> Result<BallDistance> {
    if delta < 0.0 || delta.is_nan() {
        return Err(crate::Error::InvalidArgument("ball radius must be nonnegative"));
    }
    if !w.is_finite() || w.max_abs() > SATURATION {
        return Ok(BallDistance { distance: f64::INFINITY, minimizer: x.to_vec() });
    }
    let wm = linalg::to_na(w);
    let xv = DVector::from_column_slice(x);
    let g = DVector::from_column_slice(y) - &wm * &xv;
    let d = linalg::svd(&wm)?;
    let h = d.u.adjoint() * &g;
    let c: Vec<f64> = h.iter().map(|z| z.norm()).collect();
    let ln_r: Vec<f64> = d.s.iter().map(|&s| libm::log(s)).collect();
    let sol = secular(&c, &ln_r, delta);
    let step = DVector::from_iterator(
        h.len(),
        h.iter().zip(&ln_r).map(|(hz, &lr)| {
            if hz.norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let t = sol.step(hz.norm(), lr);
            hz / hz.norm() * t
        }),
    );
    let minimizer = (xv + &d.v * step).iter().copied().collect();
    Ok(BallDistance { distance: sol.distance, minimizer })
}

/// Solution of `min Σ (c_l − r_l t_l)₊²` subject to `Σ t_l² ≤ δ²`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Secular {
    pub distance: f64,
    /// `ln ν` of the active multiplier; `None` when the constraint is slack.
    pub ln_nu: Option<f64>,
    pub delta: f64,
}

impl Secular {
    /// Optimal `t` for a component with residual `c` and gain `e^{ln_r}`.
    pub fn step(&self, c: f64, ln_r: f64) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        match self.ln_nu {
            None => {
                if ln_r == f64::NEG_INFINITY {
                    0.0
                } else {
                    c * libm::exp(-ln_r)
                }
            }
            Some(s) => {
                if ln_r == f64::NEG_INFINITY {
                    0.0
                } else {
                    c / (libm::exp(ln_r) + libm::exp(s - ln_r))
                }
            }
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        libm::exp(x)
    } else {
        libm::log1p(libm::exp(x))
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn scaled_norm(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * libm::sqrt(values.map(|v| (v / m) * (v / m)).sum::<f64>())
}

/// Components whose free step `c/r` is below this fraction of `δ` use no
/// measurable share of the ball.
pub(crate) const NEGLIGIBLE_STEP: f64 = 1e-9;

/// The distance of [`secular`] alone. Components with negligible steps are
/// dropped, and the slack and single-component cases are solved directly.
pub(crate) fn secular_distance(c: &[f64], ln_r: &[f64], delta: f64) -> f64 {
    if c.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    if delta == 0.0 {
        return scaled_norm(c.iter().copied());
    }
    let floor = libm::log(delta * NEGLIGIBLE_STEP);
    let mut kept_c = [0.0f64; 16];
    let mut kept_r = [0.0f64; 16];
    let mut kept = 0usize;
    let mut fixed = 0.0f64;
    let mut free = 0.0f64;
    for (&cv, &lr) in c.iter().zip(ln_r) {
        if cv <= 0.0 || lr == f64::INFINITY {
            continue;
        }
        if lr == f64::NEG_INFINITY {
            fixed = libm::hypot(fixed, cv);
            continue;
        }
        let lq = libm::log(cv) - lr;
        if lq < floor {
            continue;
        }
        if kept == kept_c.len() {
            return secular(c, ln_r, delta).distance;
        }
        kept_c[kept] = cv;
        kept_r[kept] = lr;
        kept += 1;
        free = libm::hypot(free, libm::exp(lq));
    }
    if kept == 0 || free <= delta {
        return fixed;
    }
    if kept == 1 {
        let shortfall = kept_c[0] * -libm::expm1(kept_r[0] + libm::log(delta) - libm::log(kept_c[0]));
        return libm::hypot(fixed, shortfall);
    }
    let mut all_c = [0.0f64; 17];
    let mut all_r = [0.0f64; 17];
    all_c[..kept].copy_from_slice(&kept_c[..kept]);
    all_r[..kept].copy_from_slice(&kept_r[..kept]);
    all_c[kept] = fixed;
    all_r[kept] = f64::NEG_INFINITY;
    secular(&all_c[..=kept], &all_r[..=kept], delta).distance
}

/// Evaluates the constrained residual for components `(c_l, ln r_l)`.
pub(crate) fn secular(c: &[f64], ln_r: &[f64], delta: f64) -> Secular {
    let slack = |distance| Secular { distance, ln_nu: None, delta };
    if c.iter().any(|v| !(v.is_finite())) {
        return slack(f64::INFINITY);
    }
    if delta == 0.0 {
        return slack(scaled_norm(c.iter().copied()));
    }
    let fixed = scaled_norm(c.iter().zip(ln_r).filter(|(&cv, &lr)| cv > 0.0 && lr == f64::NEG_INFINITY).map(|(&cv, _)| cv));
    let active: Vec<(f64, f64, f64)> = c
        .iter()
        .zip(ln_r)
        .filter(|(&cv, &lr)| cv > 0.0 && lr > f64::NEG_INFINITY && lr < f64::INFINITY)
        .map(|(&cv, &lr)| (cv, lr, libm::log(cv) - lr))
        .collect();
    if active.is_empty() {
        return slack(fixed);
    }
    let ln_delta2 = 2.0 * libm::log(delta);
    let lse = |s: f64| -> (f64, f64) {
        let term = |lr: f64, lq: f64| 2.0 * lq - 2.0 * softplus(s - 2.0 * lr);
        let m = active.iter().fold(f64::NEG_INFINITY, |a, &(_, lr, lq)| a.max(term(lr, lq)));
        let mut sum = 0.0;
        let mut dsum = 0.0;
        for &(_, lr, lq) in &active {
            let e = libm::exp(term(lr, lq) - m);
            sum += e;
            dsum += e * (-2.0 * logistic(s - 2.0 * lr));
        }
        (m + libm::log(sum) - ln_delta2, dsum / sum)
    };
    let free = {
        let m = active.iter().fold(f64::NEG_INFINITY, |a, &(_, _, lq)| a.max(2.0 * lq));
        m + libm::log(active.iter().map(|&(_, _, lq)| libm::exp(2.0 * lq - m)).sum::<f64>())
    };
    if free <= ln_delta2 {
        return slack(fixed);
    }
    let k = active.len() as f64;
    let mut hi = active
        .iter()
        .fold(f64::NEG_INFINITY, |a, &(_, lr, lq)| a.max(2.0 * lr + lq - 0.5 * ln_delta2))
        + 0.5 * libm::log(k)
        + 1.0;
    let mut lo = active.iter().fold(f64::INFINITY, |a, &(_, lr, _)| a.min(2.0 * lr)) - 2.0;
    let mut step = 2.0;
    while lse(lo).0 <= 0.0 && lo > -1e6 {
        lo -= step;
        step *= 2.0;
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, df) = lse(s);
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if f == 0.0 || hi - lo <= 1e-15 * (1.0 + s.abs()) {
            break;
        }
        let newton = s - f / df;
        s = if df < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (newton - s).abs() == 0.0 && (f / df).abs() <= 1e-15 * (1.0 + s.abs()) {
            break;
        }
    }
    let residual = scaled_norm(
        active
            .iter()
            .map(|&(cv, lr, _)| cv / (1.0 + libm::exp(2.0 * lr - s)))
            .chain(core::iter::once(fixed)),
    );
    Secular { distance: residual, ln_nu: Some(s), delta }
}
