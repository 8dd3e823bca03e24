//! Simultaneous block-triangular normal form of a commuting family.
//!
//! `P⁻¹·A_j·P` lies in `K_{η,r}` for every generator: the columns of `P` are
//! an adapted basis, grouped by joint generalized eigenspace and ordered so that
//! each block is lower triangular with constant diagonal.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::algebra::{is_in_k, ComplexMatrix, GeneratorFamily};
use crate::linalg::{self, CMat};
use crate::structure::Subspace;
use crate::{Error, Result, Tolerances};

/// Relative threshold for "nonzero" first block coordinates in `U` and `V`.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// A joint generalized eigenspace with the eigenvalue of each generator on it.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBlock {
    pub eigenvalues: Vec<Complex64>,
    pub subspace: Subspace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    p: ComplexMatrix,
    p_inv: ComplexMatrix,
    partition: Vec<usize>,
    joint_partition: Vec<usize>,
    eigenvalues: Vec<Vec<Complex64>>,
    cond_p: f64,
    residual: f64,
    conjugated: Vec<ComplexMatrix>,
}

impl NormalForm {
    pub fn p(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn p_inv(&self) -> &ComplexMatrix {
        &self.p_inv
    }

    /// Block sizes `η = (n₁,…,n_r)`.
    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    /// Block sizes with every joint generalized eigenspace kept whole.
    ///
    /// Equal to `partition` except where a scalar eigenspace was split into
    /// unit blocks. It is a valid frame for the same `P`.
    pub fn joint_partition(&self) -> &[usize] {
        &self.joint_partition
    }

    pub fn r(&self) -> usize {
        self.partition.len()
    }

    pub fn n(&self) -> usize {
        self.p.dim()
    }

    /// Diagonal value of each generator on each block.
    pub fn block_eigenvalues(&self) -> &[Vec<Complex64>] {
        &self.eigenvalues
    }

    pub fn cond_p(&self) -> f64 {
        self.cond_p
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// The generators expressed in the adapted basis, `P⁻¹·A_j·P`.
    pub fn conjugated(&self) -> &[ComplexMatrix] {
        &self.conjugated
    }

    pub fn block_offsets(&self) -> Vec<usize> {
        offsets(&self.partition)
    }

    pub fn to_normal(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.p_inv.mul_vec(x)
    }

    pub fn from_normal(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.p.mul_vec(u)
    }

    /// The same conjugation with the coarser joint partition as frame.
    pub fn coarse(&self) -> NormalForm {
        let mut nf = self.clone();
        let mut eigenvalues = Vec::new();
        let mut block = 0;
        for &size in &self.joint_partition {
            eigenvalues.push(self.eigenvalues[block].clone());
            let mut covered = 0;
            while covered < size {
                covered += self.partition[block];
                block += 1;
            }
        }
        nf.partition = self.joint_partition.clone();
        nf.eigenvalues = eigenvalues;
        nf.residual = structure_residual(&nf.conjugated, &nf.partition);
        nf
    }
}

pub(crate) fn offsets(partition: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(partition.len());
    let mut acc = 0;
    for &s in partition {
        out.push(acc);
        acc += s;
    }
    out
}

struct Piece {
    q: CMat,
    restricted: Vec<CMat>,
}

enum Clustering {
    Labels(Vec<usize>, usize),
    Ambiguous { gap: f64, radius: f64 },
}

/// Splits `ℂⁿ` into joint generalized eigenspaces of the family.
pub fn common_spectral_split(family: &GeneratorFamily, tol: &Tolerances) -> Result<Vec<SpectralBlock>> {
    let pieces = split_pieces(family, tol)?;
    Ok(pieces
        .into_iter()
        .map(|pc| {
            let eigenvalues = pc.restricted.iter().map(mean_diagonal).collect();
            SpectralBlock { eigenvalues, subspace: Subspace::from_orthonormal(pc.q, tol.rank) }
        })
        .collect())
}

fn split_pieces(family: &GeneratorFamily, tol: &Tolerances) -> Result<Vec<Piece>> {
    let n = family.n();
    let tau = tol.eigen * (1.0 + family.max_norm());
    if family.is_diagonal() {
        return Ok(diagonal_pieces(family, tau));
    }
    let root = Piece {
        q: CMat::identity(n, n),
        restricted: family.generators().iter().map(linalg::to_na).collect(),
    };
    let mut out = Vec::new();
    split_recursive(root, tau, tol, &mut out)?;
    Ok(out)
}

fn diagonal_pieces(family: &GeneratorFamily, tau: f64) -> Vec<Piece> {
    let n = family.n();
    let diags: Vec<Vec<Complex64>> = family.generators().iter().map(ComplexMatrix::diagonal).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let found = groups.iter_mut().find(|g| diags.iter().all(|d| (d[g[0]] - d[i]).norm() <= tau));
        match found {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let mut q = CMat::zeros(n, g.len());
            for (c, &i) in g.iter().enumerate() {
                q[(i, c)] = Complex64::new(1.0, 0.0);
            }
            let restricted = diags
                .iter()
                .map(|d| CMat::from_diagonal(&DVector::from_iterator(g.len(), g.iter().map(|&i| d[i]))))
                .collect();
            Piece { q, restricted }
        })
        .collect()
}

fn split_recursive(piece: Piece, tau: f64, tol: &Tolerances, out: &mut Vec<Piece>) -> Result<()> {
    let d = piece.q.ncols();
    if d == 1 {
        out.push(piece);
        return Ok(());
    }
    let mut ambiguous = None;
    for (j, m) in piece.restricted.iter().enumerate() {
        let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::Decomposition("Schur"))?;
        let (q, t) = schur.unpack();
        let eig: Vec<Complex64> = (0..d).map(|i| t[(i, i)]).collect();
        let (labels, count) = match cluster(&eig, linalg::frob(m), tau, tol) {
            Clustering::Labels(l, c) => (l, c),
            Clustering::Ambiguous { gap, radius } => {
                ambiguous.get_or_insert(Error::ClusteringAmbiguous { generator: j, gap, radius });
                continue;
            }
        };
        if count == 1 {
            continue;
        }
        let mut bases = Vec::with_capacity(count);
        for c in 0..count {
            bases.push(leading_schur_vectors(&q, &t, &labels, c));
        }
        let mut assembled = CMat::zeros(d, d);
        let mut col = 0;
        for b in &bases {
            assembled.view_mut((0, col), (d, b.ncols())).copy_from(b);
            col += b.ncols();
        }
        let sv = linalg::svd(&assembled)?;
        if sv.s.last().copied().unwrap_or(0.0) < 1e-10 {
            ambiguous.get_or_insert(Error::ClusteringAmbiguous { generator: j, gap: 0.0, radius: tau });
            continue;
        }
        for s in bases {
            let sh = s.adjoint();
            let restricted = piece.restricted.iter().map(|r| &sh * r * &s).collect();
            split_recursive(Piece { q: &piece.q * &s, restricted }, tau, tol, out)?;
        }
        return Ok(());
    }
    if let Some(e) = ambiguous {
        return Err(e);
    }
    out.push(piece);
    Ok(())
}

/// Single-linkage clustering with a radius that widens with cluster size.
fn cluster(eig: &[Complex64], norm: f64, tau: f64, tol: &Tolerances) -> Clustering {
    let d = eig.len();
    let radius = |m: usize| -> f64 {
        if m <= 1 {
            tau
        } else {
            f64::max(tau, tol.jordan_spread * libm::pow(f64::EPSILON * norm, 1.0 / m as f64))
        }
    };
    let mut in_tree = vec![false; d];
    let mut best = vec![(f64::INFINITY, 0usize); d];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(d.saturating_sub(1));
    in_tree[0] = true;
    for i in 1..d {
        best[i] = ((eig[i] - eig[0]).norm(), 0);
    }
    for _ in 1..d {
        let next = (0..d)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].0.partial_cmp(&best[b].0).unwrap_or(Ordering::Equal))
            .unwrap();
        in_tree[next] = true;
        edges.push((best[next].0, best[next].1, next));
        for i in 0..d {
            if !in_tree[i] {
                let len = (eig[i] - eig[next]).norm();
                if len < best[i].0 {
                    best[i] = (len, next);
                }
            }
        }
    }
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let components = |cut: usize| -> Vec<usize> {
        let mut parent: Vec<usize> = (0..d).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(_, a, b) in &edges[..cut] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        (0..d).map(|i| find(&mut parent, i)).collect()
    };
    let mut chosen = 0;
    for cut in 1..=edges.len() {
        let roots = components(cut);
        let valid = edges[..cut].iter().all(|&(len, a, _)| {
            let size = roots.iter().filter(|&&r| r == roots[a]).count();
            len <= radius(size)
        });
        if valid {
            chosen = cut;
        }
    }
    let roots = components(chosen);
    for &(len, a, b) in &edges[chosen..] {
        if roots[a] == roots[b] {
            continue;
        }
        let size = roots.iter().filter(|&&r| r == roots[a] || r == roots[b]).count();
        let r = radius(size);
        if len <= tol.ambiguity_factor * r {
            return Clustering::Ambiguous { gap: len, radius: r };
        }
    }
    let mut ids: Vec<usize> = Vec::new();
    let labels = roots
        .iter()
        .map(|r| match ids.iter().position(|x| x == r) {
            Some(p) => p,
            None => {
                ids.push(*r);
                ids.len() - 1
            }
        })
        .collect();
    Clustering::Labels(labels, ids.len())
}

/// Reorders the Schur form so cluster `c` leads, returning its Schur vectors.
fn leading_schur_vectors(q: &CMat, t: &CMat, labels: &[usize], c: usize) -> CMat {
    let d = t.nrows();
    let mut q = q.clone();
    let mut t = t.clone();
    let mut labels = labels.to_vec();
    let mut filled = 0;
    for i in 0..d {
        if labels[i] != c {
            continue;
        }
        let mut k = i;
        while k > filled {
            swap_schur(&mut q, &mut t, k - 1);
            labels.swap(k - 1, k);
            k -= 1;
        }
        filled += 1;
    }
    q.columns(0, filled).into_owned()
}

/// Exchanges adjacent diagonal entries `k` and `k+1` of an upper-triangular Schur factor.
fn swap_schur(q: &mut CMat, t: &mut CMat, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let (cs, sn) = givens(t[(k, k + 1)], t22 - t11);
    for j in k + 2..n {
        let x = t[(k, j)];
        let y = t[(k + 1, j)];
        t[(k, j)] = x * cs + sn * y;
        t[(k + 1, j)] = y * cs - sn.conj() * x;
    }
    let snc = sn.conj();
    for i in 0..k {
        let x = t[(i, k)];
        let y = t[(i, k + 1)];
        t[(i, k)] = x * cs + snc * y;
        t[(i, k + 1)] = y * cs - sn * x;
    }
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    for i in 0..q.nrows() {
        let x = q[(i, k)];
        let y = q[(i, k + 1)];
        q[(i, k)] = x * cs + snc * y;
        q[(i, k + 1)] = y * cs - sn * x;
    }
}

fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    if g == zero {
        return (1.0, zero);
    }
    if f == zero {
        return (0.0, g.conj() / g.norm());
    }
    let fa = f.norm();
    let r = libm::hypot(fa, g.norm());
    (fa / r, (f / fa) * g.conj() / r)
}

fn mean_diagonal(m: &CMat) -> Complex64 {
    m.trace() / m.nrows() as f64
}

struct BuiltBlock {
    basis: CMat,
    eigenvalues: Vec<Complex64>,
    joint: usize,
}

/// Computes `P` with `P⁻¹·A_j·P ∈ K_{η,r}` for every generator.
///
/// Blocks are sorted by descending size, then lexicographically by their
/// eigenvalue tuple compared by real then imaginary part. A joint eigenspace
/// on which every generator is scalar is split into unit blocks.
pub fn build_normal_form(family: &GeneratorFamily, tol: &Tolerances) -> Result<NormalForm> {
    let n = family.n();
    let pieces = split_pieces(family, tol)?;
    let mut blocks: Vec<BuiltBlock> = Vec::new();
    for (joint, pc) in pieces.into_iter().enumerate() {
        let d = pc.q.ncols();
        let mus: Vec<Complex64> = pc.restricted.iter().map(mean_diagonal).collect();
        let nil: Vec<CMat> = pc
            .restricted
            .iter()
            .zip(&mus)
            .map(|(r, &mu)| r - CMat::identity(d, d) * mu)
            .collect();
        let scalar = nil
            .iter()
            .zip(&pc.restricted)
            .all(|(nm, r)| linalg::frob(nm) <= tol.structure * (1.0 + linalg::frob(r)));
        if scalar {
            for c in 0..d {
                blocks.push(BuiltBlock { basis: pc.q.columns(c, 1).into_owned(), eigenvalues: mus.clone(), joint });
            }
        } else {
            let flag = triangularizing_flag(&nil)?;
            blocks.push(BuiltBlock { basis: &pc.q * flag, eigenvalues: mus, joint });
        }
    }
    blocks.sort_by(|a, b| {
        b.basis
            .ncols()
            .cmp(&a.basis.ncols())
            .then_with(|| cmp_tuple(&a.eigenvalues, &b.eigenvalues))
            .then_with(|| a.joint.cmp(&b.joint))
    });
    let mut pm = CMat::zeros(n, n);
    let mut col = 0;
    let mut partition = Vec::with_capacity(blocks.len());
    let mut joint_partition: Vec<usize> = Vec::new();
    let mut last_joint = None;
    for b in &blocks {
        let w = b.basis.ncols();
        for c in 0..w {
            let mut v = b.basis.column(c).into_owned();
            normalize_phase(&mut v);
            pm.set_column(col + c, &v);
        }
        col += w;
        partition.push(w);
        if last_joint == Some(b.joint) {
            *joint_partition.last_mut().unwrap() += w;
        } else {
            joint_partition.push(w);
        }
        last_joint = Some(b.joint);
    }
    let p_inv_na = if family.is_diagonal() {
        pm.adjoint()
    } else {
        pm.clone().try_inverse().ok_or(Error::Decomposition("inverse"))?
    };
    let cond_p = if family.is_diagonal() { 1.0 } else { linalg::condition_number(&pm)? };
    let p = linalg::from_na(&pm);
    let p_inv = linalg::from_na(&p_inv_na);
    let conjugated: Vec<ComplexMatrix> = family.generators().iter().map(|g| &(&p_inv * g) * &p).collect();
    let residual = structure_residual(&conjugated, &partition);
    let nf = NormalForm {
        p,
        p_inv,
        partition,
        joint_partition,
        eigenvalues: blocks.into_iter().map(|b| b.eigenvalues).collect(),
        cond_p,
        residual,
        conjugated,
    };
    if !(cond_p <= tol.max_condition) {
        return Err(Error::IllConditioned { cond: cond_p, best: Box::new(nf) });
    }
    Ok(nf)
}

fn structure_residual(conjugated: &[ComplexMatrix], partition: &[usize]) -> f64 {
    conjugated
        .iter()
        .map(|c| is_in_k(c, partition, 0.0).map(|k| k.residual).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

fn cmp_tuple(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then_with(|| x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

fn normalize_phase(v: &mut DVector<Complex64>) {
    let mut idx = 0;
    let mut best = 0.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best * (1.0 + 1e-12) {
            best = z.norm();
            idx = i;
        }
    }
    if best > 0.0 {
        let phase = v[idx].conj() / best;
        for z in v.iter_mut() {
            *z *= phase;
        }
        v[idx] = Complex64::new(best, 0.0);
    }
}

/// Unitary basis in which every nilpotent `N_j` is strictly lower triangular.
///
/// Repeatedly takes the common null vector of the compressions of the `N_j`
/// to the orthogonal complement of the flag built so far, then reverses it.
fn triangularizing_flag(nil: &[CMat]) -> Result<CMat> {
    let d = nil[0].nrows();
    let mut comp = CMat::identity(d, d);
    let mut flag: Vec<DVector<Complex64>> = Vec::with_capacity(d);
    for step in 0..d {
        let k = d - step;
        if k == 1 {
            flag.push(comp.column(0).into_owned());
            break;
        }
        let ch = comp.adjoint();
        let mut stacked = CMat::zeros(nil.len() * k, k);
        for (j, nm) in nil.iter().enumerate() {
            let c = &ch * nm * &comp;
            stacked.view_mut((j * k, 0), (k, k)).copy_from(&c);
        }
        let v = linalg::smallest_right_vectors(&stacked, 1)?;
        flag.push(&comp * v.column(0));
        let perp = linalg::smallest_right_vectors(&v.adjoint(), k - 1)?;
        comp = &comp * perp;
    }
    let mut out = CMat::zeros(d, d);
    for (c, f) in flag.iter().rev().enumerate() {
        out.set_column(c, f);
    }
    Ok(out)
}

/// The reference vectors `u₀`, `v₀ = P·u₀` and membership tests for `U`, `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceFrame {
    pub u0: Vec<Complex64>,
    pub v0: Vec<Complex64>,
    partition: Vec<usize>,
    p_inv: ComplexMatrix,
    tol: f64,
}

impl ReferenceFrame {
    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// `u ∈ U`: every block's first coordinate is nonzero relative to `‖u‖`.
    pub fn in_u(&self, u: &[Complex64]) -> bool {
        let scale = linalg::vec_norm(u);
        if !(scale > 0.0) {
            return false;
        }
        offsets(&self.partition).iter().all(|&o| u[o].norm() > self.tol * scale)
    }

    pub fn in_v(&self, x: &[Complex64]) -> bool {
        self.in_u(&self.p_inv.mul_vec(x))
    }
}

pub fn reference_frame(nf: &NormalForm) -> ReferenceFrame {
    let mut u0 = vec![Complex64::new(0.0, 0.0); nf.n()];
    for o in nf.block_offsets() {
        u0[o] = Complex64::new(1.0, 0.0);
    }
    let v0 = nf.p.mul_vec(&u0);
    ReferenceFrame { u0, v0, partition: nf.partition.clone(), p_inv: nf.p_inv.clone(), tol: MEMBERSHIP_TOL }
}
