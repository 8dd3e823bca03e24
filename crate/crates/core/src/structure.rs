//! The subspaces `F_G`, `H_x`, `H_k` and the block rank condition.

use alloc::vec::Vec;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::algebra::{is_in_k, ComplexMatrix};
use crate::linalg::{self, CMat};
use crate::normal_form::{offsets, NormalForm};
use crate::{Error, Result, Tolerances};

/// Orthonormal basis of a subspace of `ℂⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: CMat,
    tol: f64,
}

impl Subspace {
    pub(crate) fn from_orthonormal(basis: CMat, tol: f64) -> Self {
        Subspace { ambient_dim: basis.nrows(), basis, tol }
    }

    pub fn zero(n: usize) -> Self {
        Subspace { ambient_dim: n, basis: CMat::zeros(n, 0), tol: 0.0 }
    }

    pub fn full(n: usize) -> Self {
        Subspace { ambient_dim: n, basis: CMat::identity(n, n), tol: 0.0 }
    }

    /// Span of `vectors`, keeping singular directions above `rel_tol · σ_max`.
    pub fn span(n: usize, vectors: &[Vec<Complex64>], rel_tol: f64) -> Result<Self> {
        let mut m = CMat::zeros(n, vectors.len());
        for (c, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::InvalidArgument("vector length differs from ambient dimension"));
            }
            m.set_column(c, &DVector::from_column_slice(v));
        }
        Self::span_columns(&m, rel_tol)
    }

    pub(crate) fn span_columns(m: &CMat, rel_tol: f64) -> Result<Self> {
        let (basis, _) = linalg::orth(m, rel_tol)?;
        Ok(Subspace { ambient_dim: m.nrows(), basis, tol: rel_tol })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Relative singular-value threshold the basis was computed with.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn basis_vectors(&self) -> Vec<Vec<Complex64>> {
        (0..self.rank()).map(|c| self.basis.column(c).iter().copied().collect()).collect()
    }

    pub fn project(&self, v: &[Complex64]) -> Vec<Complex64> {
        let x = DVector::from_column_slice(v);
        let coeff = self.basis.adjoint() * &x;
        (&self.basis * coeff).iter().copied().collect()
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn distance(&self, v: &[Complex64]) -> f64 {
        let p = self.project(v);
        libm::sqrt(v.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>())
    }

    /// `distance(v) ≤ rel_tol · ‖v‖`.
    pub fn contains(&self, v: &[Complex64], rel_tol: f64) -> bool {
        self.distance(v) <= rel_tol * linalg::vec_norm(v)
    }

    /// Rank-revealing sum of two subspaces.
    pub fn sum(&self, other: &Subspace, rel_tol: f64) -> Result<Subspace> {
        let n = self.ambient_dim;
        let mut m = CMat::zeros(n, self.rank() + other.rank());
        m.view_mut((0, 0), (n, self.rank())).copy_from(&self.basis);
        m.view_mut((0, self.rank()), (n, other.rank())).copy_from(&other.basis);
        Self::span_columns(&m, rel_tol)
    }

    /// Principal angles in ascending order, computed from sines for accuracy at small angles.
    /// Both subspaces must have the same rank.
    pub fn principal_angles(&self, other: &Subspace) -> Result<Vec<f64>> {
        if self.rank() != other.rank() {
            return Err(Error::InvalidArgument("principal angles need equal ranks"));
        }
        if self.rank() == 0 {
            return Ok(Vec::new());
        }
        let residual = &other.basis - &self.basis * (self.basis.adjoint() * &other.basis);
        let d = linalg::svd(&residual)?;
        let mut angles: Vec<f64> = d.s.iter().map(|&s| libm::asin(s.min(1.0))).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(angles)
    }

    /// Block-diagonal direct sum of subspaces of consecutive coordinate blocks.
    pub fn direct_sum(parts: &[Subspace]) -> Subspace {
        let n: usize = parts.iter().map(|p| p.ambient_dim).sum();
        let r: usize = parts.iter().map(Subspace::rank).sum();
        let mut m = CMat::zeros(n, r);
        let (mut row, mut col) = (0, 0);
        for p in parts {
            m.view_mut((row, col), (p.ambient_dim, p.rank())).copy_from(&p.basis);
            row += p.ambient_dim;
            col += p.rank();
        }
        let tol = parts.iter().fold(0.0, |t, p| f64::max(t, p.tol));
        Subspace { ambient_dim: n, basis: m, tol }
    }
}

/// `F_G` of a single triangular block family: seeds `(A_j − μ_j I)e_i`, `i < n_k`,
/// closed under the generators.
pub fn f_subspace(block_generators: &[ComplexMatrix], tol: &Tolerances) -> Result<Subspace> {
    let d = block_generators.first().ok_or(Error::EmptyFamily)?.dim();
    let mut seeds = Vec::new();
    for (index, a) in block_generators.iter().enumerate() {
        if a.dim() != d {
            return Err(Error::DimensionMismatch { index, expected: d, found: a.dim() });
        }
        let k = is_in_k(a, &[d], tol.structure)?;
        if !k.member {
            return Err(Error::NotTriangularForm { index, residual: k.residual });
        }
        let mu = a.diagonal().iter().sum::<Complex64>() / d as f64;
        for i in 0..d.saturating_sub(1) {
            let mut col: Vec<Complex64> = (0..d).map(|r| a.get(r, i)).collect();
            col[i] -= mu;
            seeds.push(col);
        }
    }
    let s = Subspace::span(d, &seeds, tol.rank)?;
    let mut grown = s.basis_vectors();
    for a in block_generators {
        for q in s.basis_vectors() {
            grown.push(a.mul_vec(&q));
        }
    }
    let closed = Subspace::span(d, &grown, tol.rank)?;
    if closed.rank() != s.rank() {
        return Err(Error::ClosureGrowth { before: s.rank(), after: closed.rank() });
    }
    Ok(s)
}

/// Rank of `F_{G_k}` for one block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockRank {
    pub size: usize,
    pub rank: usize,
    pub satisfied: bool,
    /// `F_{G_k}` in the block's local coordinates.
    pub subspace: Subspace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockStructureReport {
    pub blocks: Vec<BlockRank>,
    pub pass: bool,
}

impl BlockStructureReport {
    pub fn failing_blocks(&self) -> Vec<usize> {
        self.blocks.iter().enumerate().filter(|(_, b)| !b.satisfied).map(|(k, _)| k).collect()
    }
}

pub(crate) fn extract_block(m: &ComplexMatrix, offset: usize, size: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(size, |i, j| m.get(offset + i, offset + j))
}

/// Checks `rank(F_{G_k}) = n_k − 1` on every joint eigenspace block.
///
/// The joint partition is the coarsest valid frame, so a failure there is an
/// obstruction for every frame.
pub fn rank_condition(nf: &NormalForm, tol: &Tolerances) -> Result<BlockStructureReport> {
    let partition = nf.joint_partition();
    let mut blocks = Vec::with_capacity(partition.len());
    for (&off, &size) in offsets(partition).iter().zip(partition) {
        let gens: Vec<ComplexMatrix> = nf.conjugated().iter().map(|g| extract_block(g, off, size)).collect();
        let subspace = f_subspace(&gens, tol)?;
        let rank = subspace.rank();
        blocks.push(BlockRank { size, rank, satisfied: rank + 1 == size, subspace });
    }
    let pass = blocks.iter().all(|b| b.satisfied);
    Ok(BlockStructureReport { blocks, pass })
}

/// `H_x = ⊕ (ℂx_k + F_{G_k})` for `x` in normal-form coordinates.
pub fn h_subspace(x: &[Complex64], nf: &NormalForm, tol: &Tolerances) -> Result<Subspace> {
    if x.len() != nf.n() {
        return Err(Error::InvalidArgument("vector length differs from dimension"));
    }
    let partition = nf.partition();
    let mut parts = Vec::with_capacity(partition.len());
    for (&off, &size) in offsets(partition).iter().zip(partition) {
        let gens: Vec<ComplexMatrix> = nf.conjugated().iter().map(|g| extract_block(g, off, size)).collect();
        let f = f_subspace(&gens, tol)?;
        let xk = x[off..off + size].to_vec();
        let mut vectors = f.basis_vectors();
        if xk.iter().any(|z| z.norm() > 0.0) {
            vectors.push(xk);
        }
        parts.push(Subspace::span(size, &vectors, tol.rank)?);
    }
    Ok(Subspace::direct_sum(&parts))
}

/// Largest normalized distance from `A_j·q` to `s` over generators and basis vectors.
pub fn invariance_residual(s: &Subspace, generators: &[ComplexMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for a in generators {
        for q in s.basis_vectors() {
            let aq = a.mul_vec(&q);
            worst = worst.max(s.distance(&aq) / (linalg::vec_norm(&aq) + 1.0));
        }
    }
    worst
}

/// `H_k = P({x : first coordinate of block k is 0})`, one hyperplane per block.
pub fn jdense_locus_bound(nf: &NormalForm) -> Result<Vec<Subspace>> {
    let n = nf.n();
    let p = linalg::to_na(nf.p());
    let mut out = Vec::with_capacity(nf.r());
    for off in nf.block_offsets() {
        let mut m = CMat::zeros(n, n - 1);
        let mut c = 0;
        for j in 0..n {
            if j != off {
                m.set_column(c, &p.column(j));
                c += 1;
            }
        }
        out.push(Subspace::span_columns(&m, 1e-12)?);
    }
    Ok(out)
}
