use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::kernel::{distance_to_ball_image, secular_distance, NEGLIGIBLE_STEP};
use super::words::{enumerate_words, rank_cmp, WordBudget};
use crate::algebra::{wrap_angle, ComplexMatrix, GeneratorFamily, Word, SATURATION};
use crate::{Error, Result};

/// Best constrained distance from `W·B̄(x, δ)` to `y` over a word budget.
#[derive(Clone, Debug, PartialEq)]
pub struct JsetScore {
    pub source: Vec<Complex64>,
    pub target: Vec<Complex64>,
    pub delta: f64,
    pub best_word: Word,
    pub best_distance: f64,
    pub budget: WordBudget,
    pub words_in_budget: u128,
    /// Words evaluated by a scan, or boxes expanded by the diagonal search.
    pub evaluations: u64,
}

/// Optional cap on the boxes expanded by the diagonal search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_nodes: Option<u64>,
}

fn validate(family: &GeneratorFamily, x: &[Complex64], y: &[Complex64], delta: f64, budget: &WordBudget) -> Result<u128> {
    if x.len() != family.n() || y.len() != family.n() {
        return Err(Error::InvalidArgument("vector length differs from dimension"));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument("ball radius must be finite and nonnegative"));
    }
    if budget.min_degree == 0 {
        return Err(Error::InvalidArgument("minimum degree must be at least 1"));
    }
    if budget.is_empty() {
        return Err(Error::InvalidBudget { min_degree: budget.min_degree, max_degree: budget.max_degree });
    }
    budget.effective_count(family.p())
}

/// Minimum of the constrained distance over the words of `budget`.
///
/// Diagonal families are searched exactly by best-first branch and bound over
/// exponent boxes; the result equals the exhaustive scan, including the
/// tie-break on enumeration order.
pub fn jset_score(family: &GeneratorFamily, x: &[Complex64], y: &[Complex64], delta: f64, budget: &WordBudget) -> Result<JsetScore> {
    jset_score_limited(family, x, y, delta, budget, SearchLimits::default())
}

pub fn jset_score_limited(
    family: &GeneratorFamily,
    x: &[Complex64],
    y: &[Complex64],
    delta: f64,
    budget: &WordBudget,
    limits: SearchLimits,
) -> Result<JsetScore> {
    let count = validate(family, x, y, delta, budget)?;
    let truncated = count < budget.count(family.p());
    match DiagonalModel::new(family, x, y, delta) {
        Some(model) if !truncated => {
            let (word, distance, nodes) = model.search(budget, limits)?;
            Ok(score(x, y, delta, budget, count, Word::new(word), distance, nodes))
        }
        _ => jset_score_exhaustive(family, x, y, delta, budget),
    }
}

/// Scans every word of the budget in enumeration order.
pub fn jset_score_exhaustive(
    family: &GeneratorFamily,
    x: &[Complex64],
    y: &[Complex64],
    delta: f64,
    budget: &WordBudget,
) -> Result<JsetScore> {
    let count = validate(family, x, y, delta, budget)?;
    let mut best: Option<(Word, f64)> = None;
    let mut evaluations = 0u64;
    if let Some(model) = DiagonalModel::new(family, x, y, delta) {
        for w in enumerate_words(family.p(), budget)? {
            let d = model.bound(w.exponents(), w.exponents(), None);
            evaluations += 1;
            if best.as_ref().is_none_or(|b| d < b.1) {
                best = Some((w, d));
            }
        }
    } else {
        let tables = PowerTables::new(family, budget.max_degree);
        for w in enumerate_words(family.p(), budget)? {
            let d = match tables.word_matrix(family, &w) {
                Some(m) => distance_to_ball_image(&m, x, delta, y)?.distance,
                None => f64::INFINITY,
            };
            evaluations += 1;
            if best.as_ref().is_none_or(|b| d < b.1) {
                best = Some((w, d));
            }
        }
    }
    let (word, distance) = best.ok_or(Error::InvalidBudget { min_degree: budget.min_degree, max_degree: budget.max_degree })?;
    Ok(score(x, y, delta, budget, count, word, distance, evaluations))
}

#[allow(clippy::too_many_arguments)]
fn score(x: &[Complex64], y: &[Complex64], delta: f64, budget: &WordBudget, count: u128, word: Word, distance: f64, evaluations: u64) -> JsetScore {
    JsetScore {
        source: x.to_vec(),
        target: y.to_vec(),
        delta,
        best_word: word,
        best_distance: distance,
        budget: *budget,
        words_in_budget: count,
        evaluations,
    }
}

/// Cached generator powers for linear-domain word matrices.
pub(crate) struct PowerTables {
    tables: Option<Vec<Vec<(ComplexMatrix, bool)>>>,
}

const TABLE_LIMIT: u64 = 1 << 12;

impl PowerTables {
    pub fn new(family: &GeneratorFamily, max_degree: u64) -> Self {
        if max_degree > TABLE_LIMIT {
            return PowerTables { tables: None };
        }
        let tables = family
            .generators()
            .iter()
            .map(|g| {
                let mut t = Vec::with_capacity(max_degree as usize + 1);
                t.push((ComplexMatrix::identity(family.n()), false));
                for k in 1..=max_degree as usize {
                    let (prev, sat) = &t[k - 1];
                    let next = prev * g;
                    let s = *sat || next.max_abs() > SATURATION || !next.is_finite();
                    t.push((next, s));
                }
                t
            })
            .collect();
        PowerTables { tables: Some(tables) }
    }

    /// The word's matrix, or `None` when saturated.
    pub fn word_matrix(&self, family: &GeneratorFamily, w: &Word) -> Option<ComplexMatrix> {
        let n = family.n();
        let mut acc = ComplexMatrix::identity(n);
        for (j, &k) in w.exponents().iter().enumerate() {
            if k == 0 {
                continue;
            }
            let (pw, sat) = match &self.tables {
                Some(t) => t[j][k as usize].clone(),
                None => family.generators()[j].power(k),
            };
            if sat {
                return None;
            }
            acc = &acc * &pw;
            if acc.max_abs() > SATURATION || !acc.is_finite() {
                return None;
            }
        }
        Some(acc)
    }

    /// `W·v` for the word, or `None` when saturated.
    pub fn apply(&self, family: &GeneratorFamily, w: &Word, v: &[Complex64]) -> Option<Vec<Complex64>> {
        let mut out = v.to_vec();
        for (j, &k) in w.exponents().iter().enumerate().rev() {
            if k == 0 {
                continue;
            }
            let (pw, sat) = match &self.tables {
                Some(t) => t[j][k as usize].clone(),
                None => family.generators()[j].power(k),
            };
            if sat {
                return None;
            }
            out = pw.mul_vec(&out);
            if out.iter().any(|z| !(z.norm() <= SATURATION)) {
                return None;
            }
        }
        Some(out)
    }
}

/// Box bounds and leaf values round differently; deflating box keys keeps
/// the search exact to the last bit.
const LN_SATURATION: f64 = 690.775_527_898_213_7;

const BOX_SLACK: f64 = 1.0 - 1e-9;

/// Log-domain margin keeping flatness decisions clear of leaf rounding.
const FLAT_MARGIN: f64 = 1e-6;


/// Log-domain description of a diagonal family against fixed `x`, `y`, `δ`.
struct DiagonalModel {
    n: usize,
    p: usize,
    /// `ln|λ_{j,l}|` at `j * n + l`.
    alpha: Vec<f64>,
    /// `arg λ_{j,l}` at `j * n + l`.
    theta: Vec<f64>,
    inert: Vec<bool>,
    /// Generators acting identically on the support of `x`; only their sum
    /// matters there.
    groups: Vec<Vec<usize>>,
    group_of: Vec<Option<usize>>,
    support: Vec<bool>,
    /// Per coordinate, generators sharing a nontrivial `(ln|λ|, arg λ)`, so that
    /// words with equal class sums evaluate identically.
    classes: Vec<Vec<Vec<usize>>>,
    weight: Vec<f64>,
    /// Weight restricted to coordinates where `x` is nonzero.
    support_weight: Vec<f64>,
    x_abs: Vec<f64>,
    y_abs: Vec<f64>,
    /// `y_l / x_l` where `x_l ≠ 0`.
    z: Vec<Complex64>,
    delta: f64,
}

impl DiagonalModel {
    fn new(family: &GeneratorFamily, x: &[Complex64], y: &[Complex64], delta: f64) -> Option<Self> {
        let gens = family.log_diagonals()?;
        let n = family.n();
        let p = family.p();
        let mut alpha = Vec::with_capacity(n * p);
        let mut theta = Vec::with_capacity(n * p);
        for g in gens {
            alpha.extend_from_slice(g.log_moduli());
            theta.extend_from_slice(g.args());
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return None;
        }
        let inert: Vec<bool> = (0..p).map(|j| (0..n).all(|l| alpha[j * n + l] == 0.0 && theta[j * n + l] == 0.0)).collect();
        let support: Vec<bool> = x.iter().map(|v| v.norm() > 0.0).collect();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_of = vec![None; p];
        if support.iter().any(|&s| s) {
            let same = |i: usize, j: usize| {
                (0..n).filter(|&l| support[l]).all(|l| alpha[i * n + l] == alpha[j * n + l] && theta[i * n + l] == theta[j * n + l])
            };
            for j in (0..p).filter(|&j| !inert[j]) {
                match groups.iter().position(|g| same(g[0], j)) {
                    Some(g) => groups[g].push(j),
                    None => groups.push(vec![j]),
                }
            }
            groups.retain(|g| g.len() > 1);
            for (g, members) in groups.iter().enumerate() {
                for &j in members {
                    group_of[j] = Some(g);
                }
            }
        }
        let classes = (0..n)
            .map(|l| {
                let mut cl: Vec<Vec<usize>> = Vec::new();
                for j in (0..p).filter(|&j| alpha[j * n + l] != 0.0 || theta[j * n + l] != 0.0) {
                    match cl.iter().position(|c| alpha[c[0] * n + l] == alpha[j * n + l] && theta[c[0] * n + l] == theta[j * n + l]) {
                        Some(c) => cl[c].push(j),
                        None => cl.push(vec![j]),
                    }
                }
                cl
            })
            .collect();
        let weight = (0..p)
            .map(|j| (0..n).fold(0.0f64, |m, l| m.max(alpha[j * n + l].abs() + theta[j * n + l].abs())))
            .collect();
        let support_weight = (0..p)
            .map(|j| {
                (0..n)
                    .filter(|&l| x[l].norm() > 0.0)
                    .fold(0.0f64, |m, l| m.max(alpha[j * n + l].abs() + theta[j * n + l].abs()))
            })
            .collect();
        let z = x
            .iter()
            .zip(y)
            .map(|(xv, yv)| if xv.norm() > 0.0 { yv / xv } else { Complex64::new(0.0, 0.0) })
            .collect();
        Some(DiagonalModel {
            n,
            p,
            alpha,
            theta,
            inert,
            groups,
            group_of,
            support,
            classes,
            weight,
            support_weight,
            x_abs: x.iter().map(|v| v.norm()).collect(),
            y_abs: y.iter().map(|v| v.norm()).collect(),
            z,
            delta,
        })
    }

    /// Lower bound of the constrained distance over the exponent box `[lo, hi]`,
    /// with group sums confined to `sums` on the support; exact when `lo == hi`.
    fn bound(&self, lo: &[u64], hi: &[u64], sums: Option<&[(u64, u64)]>) -> f64 {
        let n = self.n;
        let mut c = [0.0f64; 16];
        let mut lr = [0.0f64; 16];
        let mut cv;
        let mut lv;
        let (cs, ls): (&mut [f64], &mut [f64]) = if n <= 16 {
            (&mut c[..n], &mut lr[..n])
        } else {
            cv = vec![0.0; n];
            lv = vec![0.0; n];
            (&mut cv[..], &mut lv[..])
        };
        for l in 0..n {
            let (mut l_lo, mut l_hi, mut centre, mut half) = (0.0, 0.0, 0.0, 0.0);
            for class in &self.classes[l] {
                let (e_lo, e_hi) = self.class_range(class, l, lo, hi, sums);
                let a = self.alpha[class[0] * n + l];
                let t = self.theta[class[0] * n + l];
                let (a_lo, a_hi) = (a * e_lo as f64, a * e_hi as f64);
                l_lo += a_lo.min(a_hi);
                l_hi += a_lo.max(a_hi);
                centre += t * (e_lo as f64 + e_hi as f64) * 0.5;
                half += t.abs() * (e_hi - e_lo) as f64 * 0.5;
            }
            // Saturated words score +∞, as in the dense kernel.
            if l_lo > LN_SATURATION {
                return f64::INFINITY;
            }
            let l_hi = l_hi.min(LN_SATURATION);
            ls[l] = l_hi;
            cs[l] = if self.x_abs[l] == 0.0 {
                self.y_abs[l]
            } else {
                self.x_abs[l] * sector_distance(self.z[l], l_lo, l_hi, centre, half)
            };
            if self.x_abs[l] > 0.0 && self.delta > 0.0 && l_lo < l_hi {
                // The residual min over λ of |λx − y| − |λ|t is concave in t, so
                // its chord over [0, δ] is a valid line with a smaller slope.
                let u = self.delta / self.x_abs[l];
                let far = self.x_abs[l] * slack_minimum(self.z[l], libm::exp(l_lo), libm::exp(l_hi), centre, half, u);
                let slope = ((cs[l] - far) / self.delta * (1.0 + 1e-12)).min(libm::exp(l_hi));
                if slope > 0.0 {
                    ls[l] = libm::log(slope);
                }
            }
        }
        secular_distance(cs, ls, self.delta)
    }

    /// Range of the summed exponent of a coordinate class over the box.
    fn class_range(&self, class: &[usize], l: usize, lo: &[u64], hi: &[u64], sums: Option<&[(u64, u64)]>) -> (u64, u64) {
        let (mut e_lo, mut e_hi) = (0, 0);
        for &j in class {
            let (a, b) = match (sums, self.group_of[j]) {
                (Some(s), Some(g)) if self.support[l] => {
                    if self.groups[g][0] != j {
                        continue;
                    }
                    s[g]
                }
                _ => (lo[j], hi[j]),
            };
            e_lo += a;
            e_hi += b;
        }
        (e_lo, e_hi)
    }

    /// Whether every word of the box evaluates to the same distance: the
    /// support sees fixed class sums and every other coordinate is unsaturated
    /// and too large to use any of the ball.
    fn flat(&self, node: &Node) -> bool {
        let n = self.n;
        let floor = libm::log(self.delta * NEGLIGIBLE_STEP) - FLAT_MARGIN;
        for l in 0..n {
            let (mut l_lo, mut l_hi) = (0.0, 0.0);
            for class in &self.classes[l] {
                let (e_lo, e_hi) = self.class_range(class, l, &node.lo, &node.hi, Some(&node.sums));
                if self.support[l] {
                    if e_lo != e_hi {
                        return false;
                    }
                    continue;
                }
                let a = self.alpha[class[0] * n + l];
                let (a_lo, a_hi) = (a * e_lo as f64, a * e_hi as f64);
                l_lo += a_lo.min(a_hi);
                l_hi += a_lo.max(a_hi);
            }
            if self.support[l] {
                continue;
            }
            if l_hi > LN_SATURATION - FLAT_MARGIN {
                return false;
            }
            if self.delta > 0.0 && self.y_abs[l] > 0.0 && libm::log(self.y_abs[l]) - l_lo >= floor {
                return false;
            }
        }
        true
    }

    fn search(&self, budget: &WordBudget, limits: SearchLimits) -> Result<(Vec<u64>, f64, u64)> {
        let root = Node {
            lo: vec![0; self.p],
            hi: vec![budget.max_degree; self.p],
            sums: vec![(0, budget.max_degree); self.groups.len()],
        };
        let mut heap = BinaryHeap::new();
        if let Some(e) = self.entry(root, budget) {
            heap.push(e);
        }
        let mut nodes = 0u64;
        while let Some(e) = heap.pop() {
            if e.leaf {
                return Ok((e.rank, e.key, nodes));
            }
            nodes += 1;
            if limits.max_nodes.is_some_and(|m| nodes > m) {
                return Err(Error::SearchLimit { nodes });
            }
            let children = self.split(e.node, budget);
            for c in children.into_iter().flatten() {
                heap.push(c);
            }
        }
        Err(Error::InvalidBudget { min_degree: budget.min_degree, max_degree: budget.max_degree })
    }

    /// Splits the box in two, along the generator or group sum whose halves
    /// raise the bound most.
    fn split(&self, node: Node, budget: &WordBudget) -> [Option<Entry>; 2] {
        let mut axes: Vec<Axis> = (0..self.p)
            .filter(|&j| !self.inert[j] && node.hi[j] > node.lo[j])
            .map(Axis::Generator)
            .collect();
        axes.extend((0..self.groups.len()).filter(|&g| node.sums[g].1 > node.sums[g].0).map(Axis::Sum));
        let range = |a: Axis| match a {
            Axis::Generator(j) => (node.lo[j], node.hi[j]),
            Axis::Sum(g) => node.sums[g],
        };
        let lead = |a: Axis| match a {
            Axis::Generator(j) => j,
            Axis::Sum(g) => self.groups[g][0],
        };
        let span = |a: Axis| {
            let (lo, hi) = range(a);
            (hi - lo) as f64
        };
        let halves = |a: Axis| {
            let (lo, hi) = range(a);
            let mid = lo + (hi - lo) / 2;
            let mut left = node.clone();
            let mut right = node.clone();
            match a {
                Axis::Generator(j) => {
                    left.hi[j] = mid;
                    right.lo[j] = mid + 1;
                }
                Axis::Sum(g) => {
                    left.sums[g].1 = mid;
                    right.sums[g].0 = mid + 1;
                }
            }
            [self.entry(left, budget), self.entry(right, budget)]
        };
        let mut best: Option<([f64; 4], [Option<Entry>; 2])> = None;
        for a in axes {
            let children = halves(a);
            let [Some(l), Some(r)] = &children else { return children };
            let j = lead(a);
            let rank = [l.key.min(r.key), l.key.max(r.key), span(a) * self.support_weight[j], span(a) * self.weight[j]];
            if best.as_ref().is_none_or(|b| rank.partial_cmp(&b.0) == Some(Ordering::Greater)) {
                best = Some((rank, children));
            }
        }
        best.expect("non-leaf box has a splittable axis").1
    }

    fn entry(&self, mut node: Node, budget: &WordBudget) -> Option<Entry> {
        if !node.tighten(&self.groups, budget.min_degree, budget.max_degree) {
            return None;
        }
        let rank = node.min_rank_word(&self.groups, &self.group_of, budget.min_degree);
        let leaf = (0..self.p).all(|j| self.inert[j] || node.lo[j] == node.hi[j]) || self.flat(&node);
        let key = if leaf { self.bound(&rank, &rank, None) } else { self.bound(&node.lo, &node.hi, Some(&node.sums)) * BOX_SLACK };
        Some(Entry { key, rank, node, leaf })
    }
}

/// Minimum of `|λ − z| − u|λ|` over the annular sector
/// `{re^{iφ} : r ∈ [r_lo, r_hi], |φ − centre| ≤ half}`.
fn slack_minimum(z: Complex64, r_lo: f64, r_hi: f64, centre: f64, half: f64, u: f64) -> f64 {
    let psi = if half >= PI { 0.0 } else { (wrap_angle(libm::atan2(z.im, z.re) - centre).abs() - half).max(0.0) };
    let (a, b) = (z.norm() * libm::cos(psi), z.norm() * libm::sin(psi));
    let r = if u >= 1.0 { r_hi } else { (a + u * b / libm::sqrt(1.0 - u * u)).max(r_lo).min(r_hi) };
    libm::hypot(r - a, b) - u * r
}

/// Distance from `z` to the annular sector `{e^{L+iφ} : L ∈ [l_lo, l_hi], |φ − centre| ≤ half}`.
fn sector_distance(z: Complex64, l_lo: f64, l_hi: f64, centre: f64, half: f64) -> f64 {
    let r_lo = libm::exp(l_lo);
    let r_hi = libm::exp(l_hi);
    let rho = z.norm();
    let radial = (r_lo - rho).max(rho - r_hi).max(0.0);
    if half >= PI {
        return radial;
    }
    let psi = libm::atan2(z.im, z.re);
    let delta = wrap_angle(psi - centre);
    if delta.abs() <= half {
        return radial;
    }
    let edge = |phi: f64| -> f64 {
        let (s, c) = (libm::sin(phi), libm::cos(phi));
        let t = (z.re * c + z.im * s).max(r_lo).min(r_hi);
        let d = Complex64::new(z.re - t * c, z.im - t * s).norm();
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    };
    edge(centre + half).min(edge(centre - half))
}

#[derive(Clone, Copy)]
enum Axis {
    Generator(usize),
    Sum(usize),
}

/// Exponent box intersected with windows on the sums of grouped generators.
#[derive(Clone, Debug)]
struct Node {
    lo: Vec<u64>,
    hi: Vec<u64>,
    sums: Vec<(u64, u64)>,
}

impl Node {
    /// Shrinks the box to its intersection with the group windows and the
    /// degree window; false if empty.
    fn tighten(&mut self, groups: &[Vec<usize>], min_degree: u64, max_degree: u64) -> bool {
        let mut grouped = vec![false; self.lo.len()];
        for g in groups {
            for &j in g {
                grouped[j] = true;
            }
        }
        loop {
            let mut changed = false;
            for (g, members) in groups.iter().enumerate() {
                let glo: u64 = members.iter().map(|&j| self.lo[j]).sum();
                let ghi: u64 = members.iter().map(|&j| self.hi[j]).sum();
                let (s_lo, s_hi) = (self.sums[g].0.max(glo), self.sums[g].1.min(ghi));
                if s_lo > s_hi {
                    return false;
                }
                changed |= (s_lo, s_hi) != self.sums[g];
                self.sums[g] = (s_lo, s_hi);
                for &j in members {
                    let cap = s_hi - (glo - self.lo[j]);
                    let floor = s_lo.saturating_sub(ghi - self.hi[j]);
                    if self.hi[j] > cap || self.lo[j] < floor {
                        self.hi[j] = self.hi[j].min(cap);
                        self.lo[j] = self.lo[j].max(floor);
                        changed = true;
                    }
                    if self.lo[j] > self.hi[j] {
                        return false;
                    }
                }
            }
            let units = (0..self.lo.len()).filter(|&j| !grouped[j]).map(|j| (self.lo[j], self.hi[j]));
            let (sum_lo, sum_hi) = units.chain(self.sums.iter().copied()).fold((0u64, 0u64), |(a, b), (l, h)| (a + l, b + h));
            if sum_lo > max_degree || sum_hi < min_degree {
                return false;
            }
            let clip = |lo: &mut u64, hi: &mut u64| {
                let cap = max_degree - (sum_lo - *lo);
                let floor = min_degree.saturating_sub(sum_hi - *hi);
                let moved = *hi > cap || *lo < floor;
                *hi = (*hi).min(cap);
                *lo = (*lo).max(floor);
                moved
            };
            for j in 0..self.lo.len() {
                if !grouped[j] {
                    let (mut lo, mut hi) = (self.lo[j], self.hi[j]);
                    changed |= clip(&mut lo, &mut hi);
                    if lo > hi {
                        return false;
                    }
                    (self.lo[j], self.hi[j]) = (lo, hi);
                }
            }
            for w in self.sums.iter_mut() {
                changed |= clip(&mut w.0, &mut w.1);
                if w.0 > w.1 {
                    return false;
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// The first word of a tightened box in enumeration order: the lowest
    /// degree, then the largest exponents from the left.
    fn min_rank_word(&self, groups: &[Vec<usize>], group_of: &[Option<usize>], min_degree: u64) -> Vec<u64> {
        let p = self.lo.len();
        let mut fixed: Vec<Option<u64>> = vec![None; p];
        let unit_lo = |fixed: &[Option<u64>], j: usize| -> u64 {
            match group_of[j] {
                None => fixed[j].unwrap_or(self.lo[j]),
                Some(g) => {
                    let f: u64 = groups[g].iter().map(|&m| fixed[m].unwrap_or(self.lo[m])).sum();
                    f.max(self.sums[g].0)
                }
            }
        };
        let leads = |j: usize| group_of[j].is_none_or(|g| groups[g][0] == j);
        let leader = |j: usize| group_of[j].map_or(j, |g| groups[g][0]);
        let degree = min_degree.max((0..p).filter(|&j| leads(j)).map(|j| unit_lo(&fixed, j)).sum());
        for j in 0..p {
            let others: u64 = (0..p).filter(|&i| leads(i) && i != leader(j)).map(|i| unit_lo(&fixed, i)).sum();
            let v = match group_of[j] {
                None => self.hi[j].min(degree - others),
                Some(g) => {
                    let f: u64 = groups[g].iter().filter_map(|&m| fixed[m]).sum();
                    let rest: u64 = groups[g].iter().filter(|&&m| m > j).map(|&m| self.lo[m]).sum();
                    self.hi[j].min(self.sums[g].1 - f - rest).min(degree - others - f - rest)
                }
            };
            fixed[j] = Some(v);
        }
        fixed.into_iter().map(|v| v.unwrap_or(0)).collect()
    }
}

struct Entry {
    key: f64,
    rank: Vec<u64>,
    node: Node,
    leaf: bool,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| rank_cmp(&other.rank, &self.rank))
    }
}
