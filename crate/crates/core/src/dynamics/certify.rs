use alloc::vec::Vec;

use num_complex::Complex64;

use super::coverage::{CoverageGrid, DensityReport, Grid};
use super::orbit::for_each_orbit_point;
use super::words::WordBudget;
use crate::algebra::{is_in_k, GeneratorFamily};
use crate::normal_form::{build_normal_form, reference_frame, ReferenceFrame};
use crate::structure::{rank_condition, BlockStructureReport};
use crate::{Error, Result, Tolerances};

/// Lower end of each ladder rung's degree window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinDegreeRule {
    /// `M = ⌈D/4⌉`.
    Quarter,
    Fixed(u64),
}

impl MinDegreeRule {
    pub fn min_degree(&self, max_degree: u64) -> u64 {
        match *self {
            MinDegreeRule::Quarter => max_degree.div_ceil(4),
            MinDegreeRule::Fixed(m) => m,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyConfig {
    pub grid: Grid,
    pub ladder: Vec<u64>,
    pub min_degree: MinDegreeRule,
    /// Optional per-rung word cap; excess words are dropped in enumeration order.
    pub max_words: Option<u64>,
    pub projection_threshold: f64,
    pub joint_threshold: f64,
    pub plateau_ceiling: f64,
    /// Absolute coverage growth below which consecutive rungs count as flat.
    pub plateau_growth: f64,
    pub plateau_rungs: usize,
    pub tolerances: Tolerances,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            grid: Grid::default(),
            ladder: alloc::vec![10, 20, 40, 80],
            min_degree: MinDegreeRule::Quarter,
            max_words: None,
            projection_threshold: 0.9,
            joint_threshold: 0.5,
            plateau_ceiling: 0.1,
            plateau_growth: 0.01,
            plateau_rungs: 3,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NonHypercyclicReason {
    /// Blocks of the joint frame with `rank(F_{G_k}) < n_k − 1`.
    RankObstruction { blocks: Vec<usize> },
    /// Joint coverage stayed flat and low across the final rungs.
    Structure,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    EmpiricallyHypercyclic,
    NotHypercyclic(NonHypercyclicReason),
    Inconclusive,
}

/// Coverage statistics of one budget rung.
#[derive(Clone, Debug, PartialEq)]
pub struct RungEvidence {
    pub min_degree: u64,
    pub max_degree: u64,
    pub words: u64,
    /// Every 2-dimensional coordinate projection.
    pub projections: Vec<DensityReport>,
    pub min_projection: f64,
    /// The full grid for `n ≤ 2`; every pair of complex coordinates otherwise.
    pub joint: Vec<DensityReport>,
    pub joint_coverage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub verdict: Verdict,
    pub rank_report: BlockStructureReport,
    pub frame: ReferenceFrame,
    pub rungs: Vec<RungEvidence>,
}

fn joint_dims(n: usize) -> Vec<Vec<usize>> {
    if n <= 2 {
        return alloc::vec![(0..2 * n).collect()];
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push(alloc::vec![2 * i, 2 * i + 1, 2 * j, 2 * j + 1]);
        }
    }
    out
}

/// Orbit coverage of `v` at every rung of the configured ladder.
pub fn coverage_ladder(family: &GeneratorFamily, v: &[Complex64], config: &CertifyConfig) -> Result<Vec<RungEvidence>> {
    let n = family.n();
    let mut rungs = Vec::with_capacity(config.ladder.len());
    for &max_degree in &config.ladder {
        let min_degree = config.min_degree.min_degree(max_degree);
        let mut budget = WordBudget::new(min_degree, max_degree);
        if let Some(cap) = config.max_words {
            budget = budget.with_cap(cap, true);
        }
        let mut projections = Vec::new();
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                projections.push(CoverageGrid::new(config.grid, alloc::vec![a, b])?);
            }
        }
        let mut joint = joint_dims(n)
            .into_iter()
            .map(|d| CoverageGrid::new(config.grid, d))
            .collect::<Result<Vec<_>>>()?;
        let words = for_each_orbit_point(family, v, &budget, |_, x, saturated| {
            for g in projections.iter_mut().chain(joint.iter_mut()) {
                g.insert(x, saturated);
            }
        })?;
        let projections: Vec<DensityReport> = projections.iter().map(CoverageGrid::report).collect();
        let joint: Vec<DensityReport> = joint.iter().map(CoverageGrid::report).collect();
        let min_projection = projections.iter().fold(f64::INFINITY, |m, r| m.min(r.coverage));
        let joint_coverage = joint.iter().fold(f64::INFINITY, |m, r| m.min(r.coverage));
        rungs.push(RungEvidence { min_degree, max_degree, words, projections, min_projection, joint, joint_coverage });
    }
    Ok(rungs)
}

/// Applies the coverage thresholds to a ladder.
///
/// Positive when the top rung covers every 2-dimensional projection (and the
/// full grid when `n ≤ 2`); negative when joint coverage is low and flat over
/// the final `plateau_rungs` rungs.
pub fn verdict_from_ladder(rungs: &[RungEvidence], n: usize, config: &CertifyConfig) -> Verdict {
    let Some(top) = rungs.last() else {
        return Verdict::Inconclusive;
    };
    if top.min_projection >= config.projection_threshold && (n > 2 || top.joint_coverage >= config.joint_threshold) {
        return Verdict::EmpiricallyHypercyclic;
    }
    let k = config.plateau_rungs.max(1);
    if rungs.len() >= k {
        let tail = &rungs[rungs.len() - k..];
        let low = tail.iter().all(|r| r.joint_coverage < config.plateau_ceiling);
        let flat = tail.windows(2).all(|w| (w[1].joint_coverage - w[0].joint_coverage).abs() < config.plateau_growth);
        if low && flat {
            return Verdict::NotHypercyclic(NonHypercyclicReason::Structure);
        }
    }
    Verdict::Inconclusive
}

/// Normal form, rank obstruction, then the coverage ladder of the orbit of `v₀`.
pub fn certify_hypercyclic(family: &GeneratorFamily, config: &CertifyConfig) -> Result<Certificate> {
    let nf = build_normal_form(family, &config.tolerances)?;
    let rank_report = rank_condition(&nf, &config.tolerances)?;
    let frame = reference_frame(&nf);
    if !rank_report.pass {
        let blocks = rank_report.failing_blocks();
        return Ok(Certificate {
            verdict: Verdict::NotHypercyclic(NonHypercyclicReason::RankObstruction { blocks }),
            rank_report,
            frame,
            rungs: Vec::new(),
        });
    }
    let rungs = coverage_ladder(family, &frame.v0, config)?;
    let verdict = verdict_from_ladder(&rungs, family.n(), config);
    Ok(Certificate { verdict, rank_report, frame, rungs })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisProbe {
    /// Zero-based index of the first basis vector with nonzero first coordinate.
    pub index: usize,
    pub verdict: Verdict,
    pub rungs: Vec<RungEvidence>,
}

/// Runs the coverage ladder on the first basis vector lying in `ℂ*×ℂ^{n−1}`.
/// The family must already be lower triangular with constant diagonal.
pub fn basis_jset_probe(family: &GeneratorFamily, basis: &[Vec<Complex64>], config: &CertifyConfig) -> Result<BasisProbe> {
    let n = family.n();
    for (index, g) in family.generators().iter().enumerate() {
        let k = is_in_k(g, &[n], config.tolerances.structure)?;
        if !k.member {
            return Err(Error::NotTriangularForm { index, residual: k.residual });
        }
    }
    if basis.iter().any(|b| b.len() != n) {
        return Err(Error::InvalidArgument("basis vector length differs from dimension"));
    }
    let index = basis
        .iter()
        .position(|b| {
            let scale = libm::sqrt(b.iter().map(|z| z.norm_sqr()).sum::<f64>());
            scale > 0.0 && b[0].norm() > crate::normal_form::MEMBERSHIP_TOL * scale
        })
        .ok_or(Error::NoBasisVectorInU)?;
    let rungs = coverage_ladder(family, &basis[index], config)?;
    let verdict = verdict_from_ladder(&rungs, n, config);
    Ok(BasisProbe { index, verdict, rungs })
}
