//! The diagonal family `{bIₙ, A₁,…,Aₙ}` that is locally hypercyclic at every
//! `e_k` without being hypercyclic, and the search for a dense pair `(a, b)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::algebra::{diagonal_word, verify_commuting, wrap_angle, ComplexMatrix, GeneratorFamily, Word};
use crate::dynamics::{
    certify_hypercyclic, for_each_orbit_point, jset_score_limited, Certificate, CertifyConfig, CoverageGrid, Grid,
    JsetScore, NonHypercyclicReason, SearchLimits, Verdict, WordBudget,
};
use crate::{Error, Result};

/// A pair with `|a| > 1` and `1/|a| < |b| < 1` and its measured density.
#[derive(Clone, Debug, PartialEq)]
pub struct DensePair {
    pub a: Complex64,
    pub b: Complex64,
    /// Coverage of the windowed products on the reference grid.
    pub score: f64,
    pub max_exponent: u64,
    /// Number of `(k, l)` pairs in the window.
    pub pairs: u64,
    pub floor: f64,
}

impl DensePair {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        check_pair(a, b)?;
        Ok(DensePair { a, b, score: f64::NAN, max_exponent: 0, pairs: 0, floor: 0.0 })
    }
}

fn check_pair(a: Complex64, b: Complex64) -> Result<()> {
    let (ma, mb) = (a.norm(), b.norm());
    if !(ma > 1.0 && mb < 1.0 && mb * ma > 1.0) {
        return Err(Error::InvalidArgument("pair must satisfy |a| > 1 and 1/|a| < |b| < 1"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCoverage {
    pub coverage: f64,
    pub cells_hit: u64,
    pub cells_total: u64,
    pub pairs: u64,
}

/// The products `aᵏbˡ`, `0 ≤ k, l ≤ K`, whose modulus lies in `[floor, R√2]`.
#[derive(Clone, Copy, Debug)]
struct PairWindow {
    la: f64,
    lb: f64,
    ta: f64,
    tb: f64,
    ln_floor: f64,
    ln_ceiling: f64,
}

impl PairWindow {
    fn new(a: Complex64, b: Complex64, floor: f64, grid: &Grid) -> Result<Self> {
        if !(a.norm() > 1.0 && b.norm() < 1.0 && b.norm() > 0.0) {
            return Err(Error::InvalidArgument("pair must satisfy |a| > 1 and 0 < |b| < 1"));
        }
        Ok(PairWindow {
            la: libm::log(a.norm()),
            lb: libm::log(b.norm()),
            ta: libm::atan2(a.im, a.re),
            tb: libm::atan2(b.im, b.re),
            ln_floor: if floor > 0.0 { libm::log(floor) } else { f64::NEG_INFINITY },
            ln_ceiling: libm::log(grid.half_width * SQRT_2),
        })
    }

    fn log_modulus(&self, k: u64, l: u64) -> f64 {
        k as f64 * self.la + l as f64 * self.lb
    }

    fn inside(&self, k: u64, l: u64) -> bool {
        let m = self.log_modulus(k, l);
        m >= self.ln_floor && m <= self.ln_ceiling
    }

    /// Inclusive `k` range of row `l`, clipped to `[0, K]`; empty as `None`.
    fn row(&self, l: u64, max_exponent: u64) -> Option<(u64, u64)> {
        let base = l as f64 * self.lb;
        let hi_est = libm::floor((self.ln_ceiling - base) / self.la);
        if hi_est < -1.0 {
            return None;
        }
        let mut hi = (hi_est.max(0.0) as u64 + 1).min(max_exponent);
        while !self.inside(hi, l) && self.log_modulus(hi, l) > self.ln_ceiling {
            if hi == 0 {
                return None;
            }
            hi -= 1;
        }
        let lo_est = if self.ln_floor == f64::NEG_INFINITY { 0.0 } else { libm::ceil((self.ln_floor - base) / self.la) };
        let mut lo = (lo_est.max(1.0) as u64 - 1).min(hi);
        while lo <= hi && !self.inside(lo, l) {
            lo += 1;
        }
        if lo > hi || !self.inside(hi, l) {
            return None;
        }
        Some((lo, hi))
    }

    fn count(&self, max_exponent: u64) -> u64 {
        (0..=max_exponent)
            .map(|l| self.row(l, max_exponent).map_or(0, |(lo, hi)| hi - lo + 1))
            .sum()
    }

    fn point(&self, k: u64, l: u64) -> Complex64 {
        let r = libm::exp(self.log_modulus(k, l));
        let phi = k as f64 * self.ta + l as f64 * self.tb;
        Complex64::new(r * libm::cos(phi), r * libm::sin(phi))
    }

    fn coverage(&self, max_exponent: u64, grid: &Grid) -> Result<PairCoverage> {
        let mut acc = CoverageGrid::new(*grid, vec![0, 1])?;
        let mut pairs = 0;
        for l in 0..=max_exponent {
            if let Some((lo, hi)) = self.row(l, max_exponent) {
                for k in lo..=hi {
                    acc.insert(&[self.point(k, l)], false);
                    pairs += 1;
                }
            }
        }
        let r = acc.report();
        Ok(PairCoverage { coverage: r.coverage, cells_hit: r.cells_hit, cells_total: r.cells_total, pairs })
    }
}

/// Grid coverage of `{aᵏbˡ : 0 ≤ k, l ≤ K}`; products outside the box never
/// reach the grid and are not evaluated.
pub fn pair_density_score(a: Complex64, b: Complex64, max_exponent: u64, grid: &Grid) -> Result<PairCoverage> {
    windowed_pair_coverage(a, b, max_exponent, 0.0, grid)
}

/// As [`pair_density_score`], skipping products of modulus below `floor`.
/// Those can only reach the cells touching the origin.
pub fn windowed_pair_coverage(a: Complex64, b: Complex64, max_exponent: u64, floor: f64, grid: &Grid) -> Result<PairCoverage> {
    PairWindow::new(a, b, floor, grid)?.coverage(max_exponent, grid)
}

/// Every product of the window, for external inspection.
pub fn pair_points(a: Complex64, b: Complex64, max_exponent: u64, floor: f64, grid: &Grid) -> Result<Vec<(u64, u64, Complex64)>> {
    let w = PairWindow::new(a, b, floor, grid)?;
    let mut out = Vec::new();
    for l in 0..=max_exponent {
        if let Some((lo, hi)) = w.row(l, max_exponent) {
            out.extend((lo..=hi).map(|k| (k, l, w.point(k, l))));
        }
    }
    Ok(out)
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Grid of candidate `b = ρe^{iθ}` with `1/|a| < ρ < 1`. Arguments follow
/// the golden-ratio sequence, so none is a rational multiple of `2π`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSearch {
    pub moduli: usize,
    pub args: usize,
    /// Largest number of windowed `(k, l)` pairs scored per candidate.
    pub max_pairs: u64,
    pub target: f64,
    pub grid: Grid,
    /// Lower modulus cut; `None` uses half the grid resolution.
    pub floor: Option<f64>,
}

impl Default for PairSearch {
    fn default() -> Self {
        PairSearch { moduli: 64, args: 8, max_pairs: 10_000, target: 0.9, grid: Grid::default(), floor: None }
    }
}

impl PairSearch {
    /// Candidates in scan order: moduli from largest to smallest, then arguments.
    pub fn candidates(&self, a: Complex64) -> Vec<Complex64> {
        let lo = 1.0 / a.norm();
        let mut out = Vec::with_capacity(self.moduli * self.args);
        for i in 0..self.moduli {
            let rho = 1.0 - (1.0 - lo) * (i as f64 + 0.5) / self.moduli as f64;
            for j in 0..self.args {
                let theta = 2.0 * PI * libm::fmod((j + 1) as f64 * GOLDEN, 1.0);
                out.push(Complex64::new(rho * libm::cos(theta), rho * libm::sin(theta)));
            }
        }
        out
    }
}

/// Largest `K` whose window holds at most `max_pairs` pairs.
fn largest_exponent(w: &PairWindow, max_pairs: u64) -> u64 {
    let (mut lo, mut hi) = (0u64, max_pairs.max(1));
    if w.count(hi) <= max_pairs {
        return hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if w.count(mid) <= max_pairs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Scores every candidate at the largest admissible `K` and returns the first
/// one reaching the target coverage.
pub fn find_dense_pair(a: Complex64, search: &PairSearch) -> Result<DensePair> {
    if !(a.norm() > 1.0) {
        return Err(Error::InvalidArgument("|a| must exceed 1"));
    }
    let floor = search.floor.unwrap_or(0.5 * search.grid.resolution);
    let mut best = (Complex64::new(0.0, 0.0), -1.0);
    for b in search.candidates(a) {
        let w = PairWindow::new(a, b, floor, &search.grid)?;
        let k = largest_exponent(&w, search.max_pairs);
        let cov = w.coverage(k, &search.grid)?;
        if cov.coverage > best.1 {
            best = (b, cov.coverage);
        }
        if cov.coverage >= search.target {
            return Ok(DensePair { a, b, score: cov.coverage, max_exponent: k, pairs: cov.pairs, floor });
        }
    }
    Err(Error::NoPairFound { best_b: best.0, best_score: best.1 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleFamily {
    pub n: usize,
    pub a: Complex64,
    pub b: Complex64,
    /// Generators in the order `B, A₁, …, Aₙ`.
    pub family: GeneratorFamily,
    pub labels: Vec<String>,
}

impl CounterexampleFamily {
    /// Word `A_s^{i} B^{j} A_k^{j}` in generator order `B, A₁, …, Aₙ`.
    pub fn witness_word(&self, k: usize, s: usize, i: u64, j: u64) -> Word {
        let mut e = vec![0u64; self.n + 1];
        e[0] = j;
        e[1 + s] += i;
        e[1 + k] += j;
        Word::new(e)
    }
}

/// `B = bIₙ` and `A_k = diag(a,…,a,1,a,…,a)` with the 1 in slot `k`.
pub fn build_counterexample(n: usize, pair: &DensePair) -> Result<CounterexampleFamily> {
    if n < 2 {
        return Err(Error::BadDimension { n });
    }
    check_pair(pair.a, pair.b)?;
    let one = Complex64::new(1.0, 0.0);
    let mut gens = vec![ComplexMatrix::scalar(n, pair.b)];
    let mut labels = vec![String::from("B")];
    for k in 0..n {
        let d: Vec<Complex64> = (0..n).map(|l| if l == k { one } else { pair.a }).collect();
        gens.push(ComplexMatrix::from_diagonal(&d));
        labels.push(format!("A{}", k + 1));
    }
    let family = verify_commuting(gens, 0.0)?;
    Ok(CounterexampleFamily { n, a: pair.a, b: pair.b, family, labels })
}

/// Largest deviation of `log(x_i/x_n)/log a` from an integer, including the
/// phase mismatch measured in units of `ln|a|`.
pub fn verify_line_structure(point: &[Complex64], a: Complex64) -> Result<f64> {
    let mut lm = Vec::with_capacity(point.len());
    let mut args = Vec::with_capacity(point.len());
    for (index, z) in point.iter().enumerate() {
        if z.re == 0.0 && z.im == 0.0 {
            return Err(Error::ZeroCoordinate { index });
        }
        lm.push(libm::log(z.norm()));
        args.push(libm::atan2(z.im, z.re));
    }
    verify_line_structure_log(&lm, &args, a)
}

/// [`verify_line_structure`] for a point given by log-moduli and arguments.
pub fn verify_line_structure_log(log_moduli: &[f64], args: &[f64], a: Complex64) -> Result<f64> {
    let n = log_moduli.len();
    if n == 0 || args.len() != n {
        return Err(Error::InvalidArgument("point must be nonempty with matching arguments"));
    }
    if let Some(index) = log_moduli.iter().position(|l| *l == f64::NEG_INFINITY) {
        return Err(Error::ZeroCoordinate { index });
    }
    let la = libm::log(a.norm());
    let ta = libm::atan2(a.im, a.re);
    let mut worst = 0.0f64;
    for i in 0..n - 1 {
        let ell = (log_moduli[i] - log_moduli[n - 1]) / la;
        let nearest = libm::round(ell);
        let phase = wrap_angle(args[i] - args[n - 1] - nearest * ta).abs() / la.abs();
        worst = worst.max((ell - nearest).abs() + phase);
    }
    Ok(worst)
}

/// One step `B_m = A_s^{i_m} B^{j_m} A_k^{j_m}` of the explicit construction.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessStep {
    pub i: u64,
    pub j: u64,
    pub word: Word,
    /// `|a^{i}b^{j} − y_k|`.
    pub approximation_error: f64,
    /// `ln|a_{m,l}|` for every coordinate.
    pub diagonal_log_moduli: Vec<f64>,
    /// Largest log-domain deviation of `B_m x_m` from `(y₁,…,a_{m,k},…,yₙ)`,
    /// relative to the magnitude of the logs involved.
    pub image_error: f64,
    /// Largest deviation between the library's word diagonal and the closed form.
    pub diagonal_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSequence {
    pub k: usize,
    pub s: usize,
    pub target: Vec<Complex64>,
    pub steps: Vec<WitnessStep>,
    /// `|a_{m,l}|` strictly increases along the sequence for every `l ≠ k`.
    pub growth: bool,
}

impl WitnessSequence {
    pub fn max_image_error(&self) -> f64 {
        self.steps.iter().fold(0.0, |m, s| m.max(s.image_error).max(s.diagonal_error))
    }
}

/// Realizes `a^{i_m}b^{j_m} → y_k` with errors below `2^{−m}` and checks the
/// witness words on the vectors `x_m` of the construction.
pub fn witness_sequence(cf: &CounterexampleFamily, k: usize, y: &[Complex64], steps: usize, max_j: u64) -> Result<WitnessSequence> {
    let n = cf.n;
    if k >= n || y.len() != n {
        return Err(Error::InvalidArgument("witness index or target length out of range"));
    }
    let s = if k == 0 { 1 } else { 0 };
    let (la, lb) = (libm::log(cf.a.norm()), libm::log(cf.b.norm()));
    let (ta, tb) = (libm::atan2(cf.a.im, cf.a.re), libm::atan2(cf.b.im, cf.b.re));
    let yk = y[k];
    let approx = |i: u64, j: u64| -> Complex64 {
        let r = libm::exp(i as f64 * la + j as f64 * lb);
        let phi = i as f64 * ta + j as f64 * tb;
        Complex64::new(r * libm::cos(phi), r * libm::sin(phi))
    };
    let gens = cf.family.log_diagonals().expect("counterexample family is diagonal");
    let mut out = Vec::new();
    let mut j = 0u64;
    let (ly, ty) = (libm::log(yk.norm()), libm::atan2(yk.im, yk.re));
    for m in 1..=steps {
        let eps = libm::pow(0.5, m as f64);
        // Outside these log-modulus and argument gaps the error is at least ε.
        let (gap_l, gap_t) = if eps < yk.norm() {
            (-libm::log1p(-eps / yk.norm()), libm::asin(eps / yk.norm()))
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let mut found = None;
        while j < max_j {
            j += 1;
            let centre = if yk.norm() > 0.0 { (ly - j as f64 * lb) / la } else { 1.0 };
            let c = libm::round(centre).max(1.0) as u64;
            for i in [c.saturating_sub(1).max(1), c, c + 1] {
                let dl = i as f64 * la + j as f64 * lb - ly;
                if dl.abs() >= gap_l || wrap_angle(i as f64 * ta + j as f64 * tb - ty).abs() >= gap_t {
                    continue;
                }
                let e = (approx(i, j) - yk).norm();
                if e < eps && found.is_none_or(|(_, fe)| e < fe) {
                    found = Some((i, e));
                }
            }
            if found.is_some() {
                break;
            }
        }
        let Some((i, err)) = found else { break };
        let word = cf.witness_word(k, s, i, j);
        let diag = diagonal_word(gens, &word);
        let mut diagonal_error = 0.0f64;
        let mut image_error = 0.0f64;
        let mut closed = Vec::with_capacity(n);
        for l in 0..n {
            let ex = if l == k { i } else if l == s { j } else { i + j };
            let lm = ex as f64 * la + j as f64 * lb;
            let arg = wrap_angle(ex as f64 * ta + j as f64 * tb);
            closed.push(lm);
            let scale = 1.0 + lm.abs();
            diagonal_error = diagonal_error
                .max((diag.log_moduli()[l] - lm).abs() / scale)
                .max(wrap_angle(diag.args()[l] - arg).abs() / scale);
            let (x_lm, x_arg) = if l == k {
                (0.0, 0.0)
            } else if y[l].norm() == 0.0 {
                (f64::NEG_INFINITY, 0.0)
            } else {
                (libm::log(y[l].norm()) - diag.log_moduli()[l], libm::atan2(y[l].im, y[l].re) - diag.args()[l])
            };
            let (img_lm, img_arg) = (x_lm + diag.log_moduli()[l], x_arg + diag.args()[l]);
            let (want_lm, want_arg) = if l == k {
                (diag.log_moduli()[l], diag.args()[l])
            } else if y[l].norm() == 0.0 {
                (f64::NEG_INFINITY, 0.0)
            } else {
                (libm::log(y[l].norm()), libm::atan2(y[l].im, y[l].re))
            };
            if want_lm == f64::NEG_INFINITY {
                if img_lm != f64::NEG_INFINITY {
                    image_error = f64::INFINITY;
                }
                continue;
            }
            image_error = image_error
                .max((img_lm - want_lm).abs() / scale)
                .max(wrap_angle(img_arg - want_arg).abs() / scale);
        }
        out.push(WitnessStep {
            i,
            j,
            word,
            approximation_error: err,
            diagonal_log_moduli: closed,
            image_error,
            diagonal_error,
        });
    }
    let growth = out.windows(2).all(|w| {
        (0..n).filter(|&l| l != k).all(|l| w[1].diagonal_log_moduli[l] > w[0].diagonal_log_moduli[l])
    });
    Ok(WitnessSequence { k, s, target: y.to_vec(), steps: out, growth })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReproduceConfig {
    pub delta: f64,
    pub jset_budget: WordBudget,
    pub jset_threshold: f64,
    pub search_limits: SearchLimits,
    pub certify: CertifyConfig,
    pub coverage_ceiling: f64,
    pub line_threshold: f64,
    pub witness_steps: usize,
    pub witness_max_j: u64,
    pub witness_tolerance: f64,
    /// Number of targets per `k` given the explicit witness construction.
    pub witness_targets: usize,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig {
            delta: 1e-2,
            jset_budget: WordBudget::new(32_000, 128_000),
            jset_threshold: 1e-3,
            search_limits: SearchLimits::default(),
            certify: CertifyConfig::default(),
            coverage_ceiling: 0.05,
            line_threshold: 1e-9,
            witness_steps: 10,
            witness_max_j: 50_000_000,
            witness_tolerance: 1e-13,
            witness_targets: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremReport {
    pub family: CounterexampleFamily,
    /// J-set scores of `e_k` against every target, indexed by `k`.
    pub jset: Vec<Vec<JsetScore>>,
    pub jset_max: f64,
    pub jset_pass: bool,
    pub certificate: Certificate,
    pub certify_pass: bool,
    pub line_points: u64,
    pub line_max_residual: f64,
    pub line_pass: bool,
    pub witnesses: Vec<WitnessSequence>,
    pub witness_pass: bool,
    pub pass: bool,
}

/// Runs the four checks of the counterexample: J-set scores at every `e_k`,
/// non-hypercyclicity of `v₀`, the line structure of the `u₀`-orbit, and the
/// explicit witness words.
pub fn reproduce_theorem(n: usize, pair: &DensePair, config: &ReproduceConfig, targets: &[Vec<Complex64>]) -> Result<TheoremReport> {
    let cf = build_counterexample(n, pair)?;
    let mut jset = Vec::with_capacity(n);
    for k in 0..n {
        let row = targets
            .iter()
            .map(|y| basis_jset_score(&cf, k, y, config))
            .collect::<Result<Vec<_>>>()?;
        jset.push(row);
    }
    assemble_theorem_report(cf, jset, config, targets)
}

/// J-set score of `e_k` against `y` under the reproduction budget.
pub fn basis_jset_score(cf: &CounterexampleFamily, k: usize, y: &[Complex64], config: &ReproduceConfig) -> Result<JsetScore> {
    let mut ek = vec![Complex64::new(0.0, 0.0); cf.n];
    ek[k] = Complex64::new(1.0, 0.0);
    jset_score_limited(&cf.family, &ek, y, config.delta, &config.jset_budget, config.search_limits)
}

/// Completes [`reproduce_theorem`] from precomputed J-set rows, one per `k`.
pub fn assemble_theorem_report(
    cf: CounterexampleFamily,
    jset: Vec<Vec<JsetScore>>,
    config: &ReproduceConfig,
    targets: &[Vec<Complex64>],
) -> Result<TheoremReport> {
    let n = cf.n;
    let fam = &cf.family;
    if jset.len() != n {
        return Err(Error::InvalidArgument("one J-set row per basis vector is required"));
    }
    let jset_max = jset.iter().flatten().fold(0.0f64, |m, s| m.max(s.best_distance));
    let certificate = certify_hypercyclic(fam, &config.certify)?;
    let certify_pass = certificate.verdict == Verdict::NotHypercyclic(NonHypercyclicReason::Structure)
        && certificate.rungs.iter().all(|r| r.joint_coverage < config.coverage_ceiling);
    let u0 = certificate.frame.u0.clone();
    let mut line_points = 0u64;
    let mut line_max_residual = 0.0f64;
    let mut line_error = None;
    for &d in &config.certify.ladder {
        let budget = WordBudget::new(config.certify.min_degree.min_degree(d), d);
        for_each_orbit_point(fam, &u0, &budget, |_, x, saturated| {
            if saturated || line_error.is_some() {
                return;
            }
            match verify_line_structure(x, cf.a) {
                Ok(r) => {
                    line_points += 1;
                    line_max_residual = line_max_residual.max(r);
                }
                Err(e) => line_error = Some(e),
            }
        })?;
    }
    if let Some(e) = line_error {
        return Err(e);
    }
    let line_pass = line_points > 0 && line_max_residual < config.line_threshold;
    let mut witnesses = Vec::new();
    for k in 0..n {
        for y in targets.iter().take(config.witness_targets) {
            witnesses.push(witness_sequence(&cf, k, y, config.witness_steps, config.witness_max_j)?);
        }
    }
    let witness_pass = !witnesses.is_empty()
        && witnesses.iter().all(|w| {
            w.steps.len() == config.witness_steps && w.growth && w.max_image_error() <= config.witness_tolerance
        });
    let jset_pass = jset.iter().all(|row| !row.is_empty()) && jset_max < config.jset_threshold;
    let pass = jset_pass && certify_pass && line_pass && witness_pass;
    Ok(TheoremReport {
        family: cf,
        jset,
        jset_max,
        jset_pass,
        certificate,
        certify_pass,
        line_points,
        line_max_residual,
        line_pass,
        witnesses,
        witness_pass,
        pass,
    })
}
