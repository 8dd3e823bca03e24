use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::jset::PowerTables;
use super::words::{advance, WordBudget};
use crate::algebra::{diagonal_apply_into, GeneratorFamily, Word};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitPoint {
    pub word: Word,
    pub point: Vec<Complex64>,
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitCloud {
    pub n: usize,
    pub p: usize,
    pub points: Vec<OrbitPoint>,
}

impl OrbitCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn saturated_count(&self) -> usize {
        self.points.iter().filter(|p| p.saturated).count()
    }
}

/// Images of `v` under every word of the budget, in enumeration order.
pub fn orbit_sample(family: &GeneratorFamily, v: &[Complex64], budget: &WordBudget) -> Result<OrbitCloud> {
    let mut points = Vec::new();
    for_each_orbit_point(family, v, budget, |k, x, saturated| {
        points.push(OrbitPoint { word: Word::new(k.to_vec()), point: x.to_vec(), saturated });
    })?;
    Ok(OrbitCloud { n: family.n(), p: family.p(), points })
}

/// Streams `(exponents, image, saturated)` for every word of the budget
/// without materializing the cloud; returns the number of words visited.
pub fn for_each_orbit_point<F>(family: &GeneratorFamily, v: &[Complex64], budget: &WordBudget, mut f: F) -> Result<u64>
where
    F: FnMut(&[u64], &[Complex64], bool),
{
    if v.len() != family.n() {
        return Err(Error::InvalidArgument("vector length differs from dimension"));
    }
    let total = budget.effective_count(family.p())?;
    if total == 0 {
        return Ok(0);
    }
    let p = family.p();
    let mut k = vec![0u64; p];
    k[0] = budget.min_degree;
    let mut out = vec![Complex64::new(0.0, 0.0); family.n()];
    let tables = if family.is_diagonal() { None } else { Some(PowerTables::new(family, budget.max_degree)) };
    let mut visited = 0u64;
    loop {
        let saturated = match &tables {
            None => diagonal_apply_into(family, &k, v, &mut out),
            Some(t) => match t.apply(family, &Word::new(k.clone()), v) {
                Some(x) => {
                    out.copy_from_slice(&x);
                    false
                }
                None => {
                    out.iter_mut().for_each(|z| *z = Complex64::new(f64::INFINITY, 0.0));
                    true
                }
            },
        };
        f(&k, &out, saturated);
        visited += 1;
        if visited as u128 >= total || !advance(&mut k, budget.max_degree) {
            break;
        }
    }
    Ok(visited)
}
