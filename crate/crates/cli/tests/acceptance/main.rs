mod families;
mod oracles;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use families::*;
use hypercyc::parallel::{jset_pairs, pool_from_env, reproduce_theorem};
use hypercyc::parse::random_targets;
use hypercyc_core::algebra::{verify_commuting, ComplexMatrix, GeneratorFamily};
use hypercyc_core::counterexample::{
    build_counterexample, find_dense_pair, pair_density_score, windowed_pair_coverage, DensePair, PairSearch,
    ReproduceConfig,
};
use hypercyc_core::dynamics::{
    box_coverage, certify_hypercyclic, distance_to_ball_image, jset_score, orbit_sample, CertifyConfig, Grid,
    SearchLimits, Verdict, WordBudget,
};
use hypercyc_core::normal_form::{build_normal_form, reference_frame};
use hypercyc_core::structure::{f_subspace, h_subspace, invariance_residual, jdense_locus_bound};
use hypercyc_core::{Complex64, Tolerances};
use oracles::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dense_pair() -> &'static DensePair {
    static PAIR: OnceLock<DensePair> = OnceLock::new();
    PAIR.get_or_init(|| find_dense_pair(c(2.0, 0.0), &PairSearch::default()).expect("dense pair search failed"))
}

fn unit(n: usize, k: usize) -> Vec<Complex64> {
    let mut e = vec![c(0.0, 0.0); n];
    e[k] = c(1.0, 0.0);
    e
}

fn normal_form_round_trip() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut matched = 0;
    let mut worst = 0.0f64;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6);
        let p = rng.random_range(1..=3);
        let eta = random_partition(&mut rng, n);
        let k = random_k_family(&mut rng, &eta, p);
        let (p0, p0i) = random_conditioned(&mut rng, n, 100.0);
        let Ok(fam) = verify_commuting(conjugate(&p0, &p0i, &k), 1e-8) else { continue };
        let Ok(nf) = build_normal_form(&fam, &tol) else { continue };
        let mut want = eta.clone();
        want.sort();
        let mut got = nf.partition().to_vec();
        got.sort();
        worst = worst.max(nf.residual());
        if want == got && nf.residual() < 1e-8 {
            matched += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        matched >= 198 && elapsed < Duration::from_secs(60),
        format!("{matched}/200 matched, worst residual {worst:.1e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn f_oracle_equivalence() -> Outcome {
    let tol = Tolerances::default();
    let (mut agree, mut worst) = (0, 0.0f64);
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let n = rng.random_range(1..=4);
        let p = rng.random_range(1..=3);
        let gens = sparse_block_family(&mut rng, n, p);
        let f = f_subspace(&gens, &tol).map_err(|e| format!("seed {seed}: {e}"))?;
        let oracle = orthonormal_basis(&f_seeds(&gens, 4), n);
        if f.rank() != oracle.ncols() {
            failures.push(format!("seed {seed}: rank {} vs {}", f.rank(), oracle.ncols()));
            continue;
        }
        let basis = orthonormal_basis(&f.basis_vectors(), n);
        let sine = max_angle_sine(&oracle, &basis).max(max_angle_sine(&basis, &oracle));
        worst = worst.max(sine.asin());
        if sine.asin() < 1e-8 {
            agree += 1;
        } else {
            failures.push(format!("seed {seed}: angle {:.1e}", sine.asin()));
        }
    }
    let detail = format!("{agree}/100 agree, largest principal angle {worst:.1e}");
    check(agree == 100, if failures.is_empty() { detail } else { format!("{detail}; {}", failures.join(", ")) })
}

fn h_invariance() -> Outcome {
    let tol = Tolerances::default();
    let (mut pairs, mut worst, mut seed) = (0, 0.0f64, 0u64);
    while pairs < 1000 {
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + seed);
        seed += 1;
        let total = rng.random_range(2..=5);
        let sizes = random_partition(&mut rng, total);
        let p = rng.random_range(1..=3);
        let blocks: Vec<_> = sizes.iter().map(|&s| sparse_block_family(&mut rng, s, p)).collect();
        let k = assemble(&blocks);
        let n = k[0].dim();
        let (p0, p0i) = random_conditioned(&mut rng, n, 100.0);
        let Ok(fam) = verify_commuting(conjugate(&p0, &p0i, &k), 1e-8) else { continue };
        let Ok(nf) = build_normal_form(&fam, &tol) else { continue };
        for _ in 0..20 {
            let x = random_vector(&mut rng, n);
            let h = h_subspace(&nf.to_normal(&x), &nf, &tol).map_err(|e| e.to_string())?;
            worst = worst.max(invariance_residual(&h, nf.conjugated()));
            pairs += 1;
        }
    }
    check(worst < 1e-9, format!("{pairs} pairs over {seed} families, largest residual {worst:.1e}"))
}

fn theorem_reproduction() -> Outcome {
    let start = Instant::now();
    let config = ReproduceConfig::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [2, 3] {
        let targets = random_targets(100, n, 2.0, 2024 + n as u64);
        let r = reproduce_theorem(n, dense_pair(), &config, &targets).map_err(|e| e.to_string())?;
        let top = r.certificate.rungs.iter().map(|g| g.joint_coverage).fold(0.0, f64::max);
        let witness = r.witnesses.iter().map(|w| w.max_image_error()).fold(0.0, f64::max);
        pass &= r.pass;
        parts.push(format!(
            "n={n}: jset max {:.1e} [{}], certify coverage max {top:.3} [{}], line residual {:.1e} over {} points [{}], witness error {witness:.1e} [{}]",
            r.jset_max,
            r.jset_pass,
            r.certify_pass,
            r.line_max_residual,
            r.line_points,
            r.line_pass,
            r.witness_pass
        ));
    }
    let elapsed = start.elapsed();
    parts.push(format!("{:.1} s", elapsed.as_secs_f64()));
    check(pass && elapsed < Duration::from_secs(300), parts.join("; "))
}

fn dense_pair_search() -> Outcome {
    let pair = dense_pair();
    let grid = Grid::default();
    let modulus = pair.b.norm();
    let found = 0.5 < modulus && modulus < 1.0 && pair.score >= 0.9 && pair.pairs <= 10_000;
    let (mut prev_w, mut prev_u) = (0u64, 0u64);
    let mut monotone = true;
    for k in 0..=pair.max_exponent {
        let w = windowed_pair_coverage(pair.a, pair.b, k, pair.floor, &grid).map_err(|e| e.to_string())?;
        let u = pair_density_score(pair.a, pair.b, k, &grid).map_err(|e| e.to_string())?;
        monotone &= w.cells_hit >= prev_w && u.cells_hit >= prev_u;
        (prev_w, prev_u) = (w.cells_hit, u.cells_hit);
    }
    check(
        found && monotone,
        format!(
            "b = {:.6}{:+.6}i, |b| = {modulus:.6}, coverage {:.4} with {} pairs at K = {}, monotone over K ≤ {}: {monotone}",
            pair.b.re, pair.b.im, pair.score, pair.pairs, pair.max_exponent, pair.max_exponent
        ),
    )
}

fn scalar_family(values: &[Complex64]) -> GeneratorFamily {
    verify_commuting(values.iter().map(|&v| ComplexMatrix::scalar(1, v)).collect(), 0.0).unwrap()
}

fn positive_control() -> Outcome {
    let pair = dense_pair();
    let fam = scalar_family(&[pair.a, pair.b]);
    let config = CertifyConfig { ladder: vec![500, 1000, 2000, 4000], ..Default::default() };
    let cert = certify_hypercyclic(&fam, &config).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut box_point = || vec![c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))];
    let pairs: Vec<_> = (0..50).map(|_| (box_point(), box_point())).collect();
    let budget = ReproduceConfig::default().jset_budget;
    let scores = jset_pairs(&fam, &pairs, 1e-2, &budget, SearchLimits::default()).map_err(|e| e.to_string())?;
    let worst = scores.iter().map(|s| s.best_distance).fold(0.0, f64::max);
    check(
        cert.verdict == Verdict::EmpiricallyHypercyclic && worst < 1e-2,
        format!(
            "verdict {:?}, 50 J-scores at δ = 0.01 over degrees {}..={}, max {worst:.1e}",
            cert.verdict, budget.min_degree, budget.max_degree
        ),
    )
}

fn locus_consistency() -> Outcome {
    let tol = Tolerances::default();
    let config = CertifyConfig::default();
    let top = *config.ladder.last().unwrap();
    let budget = WordBudget::new(config.min_degree.min_degree(top), top);
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [2, 3] {
        let cf = build_counterexample(n, dense_pair()).map_err(|e| e.to_string())?;
        let nf = build_normal_form(&cf.family, &tol).map_err(|e| e.to_string())?;
        let frame = reference_frame(&nf);
        let locus = jdense_locus_bound(&nf).map_err(|e| e.to_string())?;
        let in_locus = (0..n).all(|k| locus.iter().any(|h| h.contains(&unit(n, k), 1e-12)));
        let basis_outside = (0..n).all(|k| !frame.in_v(&unit(n, k)));
        let u0_in_v = frame.in_v(&frame.u0) && frame.in_v(&frame.v0);
        let far: Vec<Vec<Complex64>> = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
            .iter()
            .map(|&r| (0..n).map(|i| c(2.0, 2.0) * if i == 0 { c(1.0, 0.0) } else { r }).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(70 + n as u64);
        let mut sources = Vec::new();
        while sources.len() < 20 {
            let v = nf.from_normal(&random_vector(&mut rng, n));
            if frame.in_v(&v) {
                sources.push(v);
            }
        }
        let pairs: Vec<_> = sources.iter().flat_map(|v| far.iter().map(move |y| (v.clone(), y.clone()))).collect();
        let scores = jset_pairs(&cf.family, &pairs, 1e-2, &budget, SearchLimits::default()).map_err(|e| e.to_string())?;
        let per_source: Vec<f64> =
            scores.chunks(far.len()).map(|ch| ch.iter().map(|s| s.best_distance).fold(0.0, f64::max)).collect();
        let weakest = per_source.iter().copied().fold(f64::INFINITY, f64::min);
        pass &= in_locus && basis_outside && u0_in_v && weakest > 0.1;
        parts.push(format!(
            "n={n}: e_k in locus {in_locus}, e_k outside V {basis_outside}, u0 in V {u0_in_v}, smallest far-target score {weakest:.3}"
        ));
    }
    parts.push(format!("budget {}..={}", budget.min_degree, budget.max_degree));
    check(pass, parts.join("; "))
}

fn random_diagonal_family(rng: &mut ChaCha8Rng) -> GeneratorFamily {
    let n = rng.random_range(1..=3);
    let p = rng.random_range(1..=3);
    let gens = (0..p)
        .map(|_| {
            let d: Vec<Complex64> =
                (0..n).map(|_| Complex64::from_polar(rng.random_range(-0.7f64..0.7).exp(), rng.random_range(-3.2..3.2))).collect();
            ComplexMatrix::from_diagonal(&d)
        })
        .collect();
    verify_commuting(gens, 0.0).unwrap()
}

fn kernel_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut gap = 0.0f64;
    let mut below = true;
    for _ in 0..100 {
        let w = ComplexMatrix::from_fn(3, |_, _| cgauss(&mut rng));
        let x = random_vector(&mut rng, 3);
        let delta = rng.random_range(0.05..0.3);
        let offset = random_vector(&mut rng, 3);
        let y: Vec<Complex64> = w.mul_vec(&x).iter().zip(&offset).map(|(a, b)| a + b * 0.5).collect();
        let exact = distance_to_ball_image(&w, &x, delta, &y).map_err(|e| e.to_string())?;
        let sampled = monte_carlo(&mut rng, &w, &x, delta, &y, 100_000);
        below &= exact.distance <= sampled + 1e-12;
        gap = gap.max(sampled - exact.distance);
    }

    let mut violations = 0;
    let mut checks = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(80_000 + seed);
        let fam = random_diagonal_family(&mut rng);
        let n = fam.n();
        let x = random_vector(&mut rng, n);
        let y = random_vector(&mut rng, n);
        let delta = rng.random_range(0.0..0.3);
        let m = rng.random_range(1..6);
        let (lo, hi) = (m + rng.random_range(0..10), m + 10 + rng.random_range(0..10));
        let score = |b: WordBudget| jset_score(&fam, &x, &y, delta, &b).unwrap().best_distance;
        let small = score(WordBudget::new(m, lo));
        let large = score(WordBudget::new(m, hi));
        let later = score(WordBudget::new(m + 1, hi));
        violations += usize::from(large > small) + usize::from(later < large);
        checks += 2;

        if n <= 2 {
            let grid = Grid::new(2.0, 0.25).unwrap();
            let cells = |d: u64| box_coverage(&orbit_sample(&fam, &x, &WordBudget::new(0, d)).unwrap(), &grid).unwrap().cells_hit;
            violations += usize::from(cells(hi) < cells(lo));
            checks += 1;
        }
    }
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(90_000 + seed);
        let a = ComplexMatrix::from_fn(2, |_, _| cgauss(&mut rng) * 0.8);
        let b = &(&a * &a).scale(c(0.3, 0.1)) + &ComplexMatrix::identity(2).scale(c(0.5, 0.0));
        let fam = verify_commuting(vec![a, b], 1e-10).map_err(|e| e.to_string())?;
        let (x, y) = (random_vector(&mut rng, 2), random_vector(&mut rng, 2));
        let m = rng.random_range(1..4);
        let lo = m + rng.random_range(0..3);
        let small = jset_score(&fam, &x, &y, 0.1, &WordBudget::new(m, lo)).unwrap().best_distance;
        let large = jset_score(&fam, &x, &y, 0.1, &WordBudget::new(m, lo + 3)).unwrap().best_distance;
        violations += usize::from(large > small);
        checks += 1;
    }
    check(
        below && gap < 1e-3 && violations == 0,
        format!("largest Monte-Carlo gap {gap:.1e}, {violations} of {checks} monotonicity checks violated"),
    )
}

fn run(number: usize, name: &str, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} criterion {number} ({name}): {detail} [{secs:.2} s]");
    outcome.is_ok()
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("normal-form round trip", normal_form_round_trip),
        ("F_G oracle equivalence", f_oracle_equivalence),
        ("H_x invariance", h_invariance),
        ("counterexample reproduction", theorem_reproduction),
        ("dense pair", dense_pair_search),
        ("one-dimensional positive control", positive_control),
        ("J-dense locus consistency", locus_consistency),
        ("kernel oracle and monotonicity", kernel_oracle),
    ];
    let pool = match pool_from_env() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };
    let all = || criteria.iter().enumerate().map(|(i, (name, f))| run(i + 1, name, *f)).fold(true, |a, b| a & b);
    let ok = match pool {
        Some(p) => p.install(all),
        None => all(),
    };
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
