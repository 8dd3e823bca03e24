//! Command-line value syntax: complex numbers, vectors, targets and budgets.

use hypercyc_core::dynamics::{MinDegreeRule, WordBudget};
use hypercyc_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i` and `-i`; `j` is accepted for `i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number \"{s}\"");
    if t.is_empty() {
        return Err(bad());
    }
    let real = |x: &str| x.parse::<f64>().map_err(|_| bad());
    let imag = |x: &str| match x {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => x.parse::<f64>().map_err(|_| bad()),
    };
    let z = match t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        None => Complex64::new(real(&t)?, 0.0),
        Some(body) => {
            let bytes = body.as_bytes();
            let split = (1..bytes.len())
                .rev()
                .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
            match split {
                Some(i) => Complex64::new(real(&body[..i])?, imag(&body[i..])?),
                None => Complex64::new(0.0, imag(body)?),
            }
        }
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(bad())
    }
}

/// A source vector: a standard basis vector, the reference vector `v₀`, or explicit entries.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorSpec {
    Basis(usize),
    V0,
    Explicit(Vec<Complex64>),
}

impl VectorSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let t = s.trim();
        if t == "v0" {
            return Ok(VectorSpec::V0);
        }
        if let Some(k) = t.strip_prefix('e').and_then(|k| k.parse::<usize>().ok()) {
            if k == 0 {
                return Err("basis vectors are numbered from e1".into());
            }
            return Ok(VectorSpec::Basis(k - 1));
        }
        Ok(VectorSpec::Explicit(parse_vector(t)?))
    }

    /// The vector in dimension `n`; `v0` is supplied by the caller when needed.
    pub fn resolve(&self, n: usize, v0: impl FnOnce() -> Result<Vec<Complex64>, String>) -> Result<Vec<Complex64>, String> {
        match self {
            VectorSpec::Basis(k) if *k < n => {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[*k] = Complex64::new(1.0, 0.0);
                Ok(e)
            }
            VectorSpec::Basis(k) => Err(format!("e{} is out of range for dimension {n}", k + 1)),
            VectorSpec::V0 => v0(),
            VectorSpec::Explicit(v) if v.len() == n => Ok(v.clone()),
            VectorSpec::Explicit(v) => Err(format!("vector has {} entries, dimension is {n}", v.len())),
        }
    }
}

/// Comma-separated complex entries.
pub fn parse_vector(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(',').map(parse_complex).collect()
}

/// `random:N` (seeded, uniform in the box) or `;`-separated explicit vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Random(usize),
    Explicit(Vec<Vec<Complex64>>),
}

impl TargetSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let t = s.trim();
        if let Some(count) = t.strip_prefix("random:") {
            return count.parse::<usize>().map(TargetSpec::Random).map_err(|_| format!("bad target count \"{count}\""));
        }
        t.split(';').map(parse_vector).collect::<Result<Vec<_>, _>>().map(TargetSpec::Explicit)
    }

    pub fn resolve(&self, n: usize, half_width: f64, seed: u64) -> Result<Vec<Vec<Complex64>>, String> {
        match self {
            TargetSpec::Random(count) => Ok(random_targets(*count, n, half_width, seed)),
            TargetSpec::Explicit(list) => {
                if let Some(v) = list.iter().find(|v| v.len() != n) {
                    return Err(format!("target has {} entries, dimension is {n}", v.len()));
                }
                Ok(list.clone())
            }
        }
    }
}

/// `count` vectors with real and imaginary parts uniform in `[−R, R]`.
pub fn random_targets(count: usize, n: usize, half_width: f64, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re = rng.random_range(-half_width..=half_width);
                    let im = rng.random_range(-half_width..=half_width);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect()
}

/// `quarter` or a fixed nonnegative integer.
pub fn parse_min_degree(s: &str) -> Result<MinDegreeRule, String> {
    match s.trim() {
        "quarter" => Ok(MinDegreeRule::Quarter),
        t => t.parse::<u64>().map(MinDegreeRule::Fixed).map_err(|_| format!("bad minimum degree \"{s}\"")),
    }
}

/// `D` (minimum degree from `rule`) or `M:D`.
pub fn parse_budget(s: &str, rule: MinDegreeRule) -> Result<WordBudget, String> {
    let num = |x: &str| x.trim().parse::<u64>().map_err(|_| format!("bad budget \"{s}\""));
    let budget = match s.split_once(':') {
        Some((m, d)) => WordBudget::new(num(m)?, num(d)?),
        None => {
            let d = num(s)?;
            WordBudget::new(rule.min_degree(d), d)
        }
    };
    if budget.is_empty() {
        return Err(format!("budget \"{s}\" has minimum degree above maximum"));
    }
    Ok(budget)
}
