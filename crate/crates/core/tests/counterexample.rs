mod common;

use std::collections::HashSet;
use std::sync::OnceLock;

use common::*;
use hypercyc_core::algebra::{word_apply_generic, Word};
use hypercyc_core::counterexample::*;
use hypercyc_core::dynamics::{for_each_orbit_point, Grid, WordBudget};
use hypercyc_core::normal_form::{build_normal_form, reference_frame};
use hypercyc_core::{Complex64, Error, Tolerances};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_pair() -> &'static DensePair {
    static PAIR: OnceLock<DensePair> = OnceLock::new();
    PAIR.get_or_init(|| find_dense_pair(c(2.0, 0.0), &PairSearch::default()).unwrap())
}

/// Cells hit by `aᵏbˡ`, `0 ≤ k, l ≤ K`, with powers formed by repeated multiplication.
fn linear_cells(a: Complex64, b: Complex64, max_exponent: u64, grid: &Grid) -> HashSet<(usize, usize)> {
    let mut out = HashSet::new();
    let mut bl = c(1.0, 0.0);
    for _ in 0..=max_exponent {
        let mut z = bl;
        for _ in 0..=max_exponent {
            if let (Some(i), Some(j)) = (grid.axis_cell(z.re), grid.axis_cell(z.im)) {
                out.insert((i, j));
            }
            z *= a;
        }
        bl *= b;
    }
    out
}

#[test]
fn pair_density_examples() {
    let grid = Grid::default();
    let one = pair_density_score(c(2.0, 0.0), c(0.5, 0.0), 0, &grid).unwrap();
    assert_eq!((one.cells_hit, one.cells_total, one.pairs), (1, 1600, 1));
    assert_eq!(one.coverage, 1.0 / 1600.0);
    let real = pair_density_score(c(2.0, 0.0), c(0.5, 0.0), 60, &grid).unwrap();
    assert!(real.cells_hit <= 40, "{real:?}");
    assert!(pair_density_score(c(0.5, 0.0), c(0.5, 0.0), 5, &grid).is_err());
}

#[test]
fn pair_density_matches_linear_power_oracle() {
    let grid = Grid::default();
    let cases = [
        (c(2.0, 0.0), Complex64::from_polar(0.8, 1.0)),
        (c(1.2, 0.9), Complex64::from_polar(0.9, -2.3)),
        (c(-1.7, 0.2), Complex64::from_polar(0.7, 0.4)),
    ];
    for (a, b) in cases {
        for k in [5u64, 20, 40] {
            let got = pair_density_score(a, b, k, &grid).unwrap();
            let want = linear_cells(a, b, k, &grid).len() as i64;
            // Products landing on a cell edge may round to either side.
            assert!((got.cells_hit as i64 - want).abs() <= 2, "a={a} b={b} K={k}: {} vs {want}", got.cells_hit);
        }
    }
}

#[test]
fn pair_points_are_order_independent() {
    let grid = Grid::default();
    let (a, b) = (c(2.0, 0.0), Complex64::from_polar(0.85, 2.0));
    let cov = pair_density_score(a, b, 50, &grid).unwrap();
    let mut pts = pair_points(a, b, 50, 0.0, &grid).unwrap();
    assert_eq!(pts.len() as u64, cov.pairs);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in (1..pts.len()).rev() {
        pts.swap(i, rng.random_range(0..=i));
    }
    let cells: HashSet<_> = pts
        .iter()
        .filter_map(|&(_, _, z)| Some((grid.axis_cell(z.re)?, grid.axis_cell(z.im)?)))
        .collect();
    assert_eq!(cells.len() as u64, cov.cells_hit);
}

#[test]
fn windowed_coverage_skips_only_small_products() {
    let grid = Grid::default();
    let (a, b) = (c(2.0, 0.0), Complex64::from_polar(0.9, 1.3));
    let full = pair_points(a, b, 40, 0.0, &grid).unwrap();
    let cut = pair_points(a, b, 40, 0.05, &grid).unwrap();
    let kept: HashSet<(u64, u64)> = cut.iter().map(|&(k, l, _)| (k, l)).collect();
    let all: HashSet<(u64, u64)> = full.iter().map(|&(k, l, _)| (k, l)).collect();
    assert!(kept.is_subset(&all));
    assert!(kept.len() < all.len());
    for &(k, l, z) in &full {
        if kept.contains(&(k, l)) {
            assert!(z.norm() >= 0.05 * (1.0 - 1e-12));
        } else {
            assert!(z.norm() < 0.05 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn dense_pair_search_finds_admissible_pair() {
    let pair = default_pair();
    assert_eq!(pair.a, c(2.0, 0.0));
    let m = pair.b.norm();
    assert!(0.5 < m && m < 1.0, "|b| = {m}");
    assert!(pair.score >= 0.9);
    assert!(pair.pairs <= 10_000);
    let again = windowed_pair_coverage(pair.a, pair.b, pair.max_exponent, pair.floor, &Grid::default()).unwrap();
    assert_eq!(again.coverage, pair.score);
    assert_eq!(again.pairs, pair.pairs);
}

#[test]
fn unreachable_target_reports_best_candidate() {
    let search = PairSearch { moduli: 4, args: 2, max_pairs: 500, target: 1.1, ..PairSearch::default() };
    match find_dense_pair(c(2.0, 0.0), &search) {
        Err(Error::NoPairFound { best_b, best_score }) => {
            assert!(best_score > 0.0 && best_score <= 1.0);
            assert!(search.candidates(c(2.0, 0.0)).contains(&best_b));
        }
        other => panic!("expected NoPairFound, got {other:?}"),
    }
    assert!(find_dense_pair(c(0.9, 0.0), &PairSearch::default()).is_err());
}

#[test]
fn candidates_lie_in_the_admissible_annulus() {
    let a = c(1.5, 1.0);
    let search = PairSearch::default();
    let cands = search.candidates(a);
    assert_eq!(cands.len(), search.moduli * search.args);
    assert!(cands.iter().all(|b| b.norm() > 1.0 / a.norm() && b.norm() < 1.0));
}

#[test]
fn counterexample_generators() {
    let (a, b) = (c(2.0, 0.0), Complex64::from_polar(0.8, 1.0));
    let pair = DensePair::new(a, b).unwrap();
    assert!(DensePair::new(a, c(0.4, 0.0)).is_err());
    assert!(DensePair::new(c(1.0, 0.0), b).is_err());
    assert!(matches!(build_counterexample(1, &pair), Err(Error::BadDimension { n: 1 })));
    for n in [2usize, 3] {
        let cf = build_counterexample(n, &pair).unwrap();
        assert_eq!(cf.family.p(), n + 1);
        assert_eq!(cf.family.commutation_residual(), 0.0);
        let mut labels = vec!["B".to_string()];
        labels.extend((1..=n).map(|k| format!("A{k}")));
        assert_eq!(cf.labels, labels);
        let gens = cf.family.generators();
        for r in 0..n {
            for s in 0..n {
                let want = if r == s { b } else { c(0.0, 0.0) };
                assert_eq!(gens[0].get(r, s), want);
                for k in 0..n {
                    let want = if r != s { c(0.0, 0.0) } else if r == k { c(1.0, 0.0) } else { a };
                    assert_eq!(gens[1 + k].get(r, s), want);
                }
            }
        }
    }
}

#[test]
fn witness_word_layout() {
    let cf = build_counterexample(3, &DensePair::new(c(2.0, 0.0), c(0.7, 0.0)).unwrap()).unwrap();
    assert_eq!(cf.witness_word(1, 0, 4, 9), Word::new(vec![9, 4, 9, 0]));
    assert_eq!(cf.witness_word(0, 1, 4, 9), Word::new(vec![9, 9, 4, 0]));
}

#[test]
fn line_structure_examples() {
    let a = c(2.0, 0.0);
    assert_eq!(verify_line_structure(&[c(1.0, 0.0); 3], a).unwrap(), 0.0);

    let cf = build_counterexample(2, &DensePair::new(a, Complex64::from_polar(0.8, 1.0)).unwrap()).unwrap();
    let x = word_apply_generic(&cf.family, &Word::new(vec![5, 3, 7]), &[c(1.0, 0.0); 2]);
    assert!(!x.saturated);
    assert!(verify_line_structure(&x.vector, a).unwrap() < 1e-9);

    let r = verify_line_structure(&[c(1.01, 0.0), c(1.0, 0.0)], a).unwrap();
    assert!((r - 1.01f64.ln() / 2f64.ln()).abs() < 1e-12, "{r}");

    assert!(matches!(verify_line_structure(&[c(1.0, 0.0), c(0.0, 0.0)], a), Err(Error::ZeroCoordinate { index: 1 })));
}

#[test]
fn orbit_of_u0_lies_on_lines() {
    let pair = DensePair::new(c(2.0, 0.0), Complex64::from_polar(0.8, 1.0)).unwrap();
    let cf = build_counterexample(3, &pair).unwrap();
    let u0 = vec![c(1.0, 0.0); 3];
    let mut worst = 0.0f64;
    let mut seen = 0;
    for_each_orbit_point(&cf.family, &u0, &WordBudget::new(0, 12), |_, x, saturated| {
        if !saturated {
            worst = worst.max(verify_line_structure(x, pair.a).unwrap());
            seen += 1;
        }
    })
    .unwrap();
    assert!(seen > 1000);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn basis_vectors_lie_outside_v_and_u0_inside() {
    let pair = DensePair::new(c(2.0, 0.0), Complex64::from_polar(0.8, 1.0)).unwrap();
    for n in [2usize, 3] {
        let cf = build_counterexample(n, &pair).unwrap();
        let nf = build_normal_form(&cf.family, &Tolerances::default()).unwrap();
        let frame = reference_frame(&nf);
        assert!(frame.in_v(&frame.v0));
        for k in 0..n {
            let mut ek = vec![c(0.0, 0.0); n];
            ek[k] = c(1.0, 0.0);
            assert!(!frame.in_v(&ek), "e_{k} in V");
        }
    }
}

/// `aⁱbʲ` by repeated squaring in the linear domain.
fn linear_power(z: Complex64, e: u64) -> Complex64 {
    let (mut acc, mut base, mut e) = (c(1.0, 0.0), z, e);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[test]
fn witness_sequence_approximates_targets() {
    let pair = default_pair();
    let cf = build_counterexample(2, pair).unwrap();
    let y = [c(0.6, -0.3), c(-1.1, 0.4)];
    for k in 0..2 {
        let w = witness_sequence(&cf, k, &y, 8, 50_000_000).unwrap();
        assert_eq!(w.steps.len(), 8);
        assert!(w.growth);
        assert!(w.max_image_error() <= 1e-13);
        for (m, step) in w.steps.iter().enumerate() {
            assert!(step.approximation_error < 0.5f64.powi(m as i32 + 1));
            // Independent check of the approximation in the linear domain.
            let z = linear_power(pair.a, step.i) * linear_power(pair.b, step.j);
            assert!(((z - y[k]).norm() - step.approximation_error).abs() < 1e-9 * (1.0 + step.j as f64).sqrt());
            let s = if k == 0 { 1 } else { 0 };
            assert_eq!(step.word, cf.witness_word(k, s, step.i, step.j));
        }
        assert!(w.steps.windows(2).all(|p| p[1].j > p[0].j));
    }
}

#[test]
fn witness_rejects_bad_arguments() {
    let cf = build_counterexample(2, &DensePair::new(c(2.0, 0.0), c(0.7, 0.0)).unwrap()).unwrap();
    assert!(witness_sequence(&cf, 2, &[c(1.0, 0.0); 2], 3, 100).is_err());
    assert!(witness_sequence(&cf, 0, &[c(1.0, 0.0); 3], 3, 100).is_err());
}

#[test]
fn reproduce_theorem_on_a_few_targets() {
    let pair = default_pair();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let targets: Vec<Vec<Complex64>> =
        (0..3).map(|_| (0..2).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()).collect();
    let cfg = ReproduceConfig { witness_targets: 1, witness_steps: 6, ..ReproduceConfig::default() };
    let report = reproduce_theorem(2, pair, &cfg, &targets).unwrap();
    assert!(report.jset_pass, "jset max {}", report.jset_max);
    assert!(report.certify_pass);
    assert!(report.line_pass, "line residual {}", report.line_max_residual);
    assert!(report.witness_pass);
    assert!(report.pass);
    assert_eq!(report.jset.len(), 2);
    assert_eq!(report.witnesses.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_coverage_is_monotone_in_k(
        re in -2.0f64..2.0, im in -2.0f64..2.0,
        rho in 0.3f64..0.99, theta in -3.1f64..3.1,
        k in 0u64..60,
    ) {
        let a = c(re, im);
        prop_assume!(a.norm() > 1.05);
        let b = Complex64::from_polar(rho, theta);
        let grid = Grid::default();
        let lo = pair_density_score(a, b, k, &grid).unwrap();
        let hi = pair_density_score(a, b, k + 1, &grid).unwrap();
        prop_assert!(hi.cells_hit >= lo.cells_hit);
        prop_assert!(hi.pairs >= lo.pairs);
    }

    #[test]
    fn window_holds_exactly_the_products_in_range(
        rho in 0.55f64..0.99, theta in -3.1f64..3.1, k in 0u64..40, floor in 0.0f64..0.2,
    ) {
        let (a, b) = (c(2.0, 0.0), Complex64::from_polar(rho, theta));
        let grid = Grid::default();
        let got: HashSet<(u64, u64)> = pair_points(a, b, k, floor, &grid).unwrap().iter().map(|&(i, j, _)| (i, j)).collect();
        let ceiling = grid.half_width * std::f64::consts::SQRT_2;
        for i in 0..=k {
            for j in 0..=k {
                let m = (2f64).powi(i as i32) * rho.powi(j as i32);
                // Skip products within rounding of the window edges.
                if (m / ceiling - 1.0).abs() < 1e-12 || (floor > 0.0 && (m / floor - 1.0).abs() < 1e-12) {
                    continue;
                }
                prop_assert_eq!(got.contains(&(i, j)), m >= floor && m <= ceiling, "({}, {})", i, j);
            }
        }
    }
}
