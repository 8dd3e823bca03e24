use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::algebra::Word;
use crate::{Error, Result};

/// Total-degree window `[min_degree, max_degree]` with an optional word cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordBudget {
    pub min_degree: u64,
    pub max_degree: u64,
    pub max_words: Option<u64>,
    /// Keep the first `max_words` words instead of failing when the cap is exceeded.
    pub truncate: bool,
}

impl WordBudget {
    pub fn new(min_degree: u64, max_degree: u64) -> Self {
        WordBudget { min_degree, max_degree, max_words: None, truncate: false }
    }

    pub fn with_cap(mut self, max_words: u64, truncate: bool) -> Self {
        self.max_words = Some(max_words);
        self.truncate = truncate;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.max_degree < self.min_degree
    }

    /// Number of words in the degree window, before any cap.
    pub fn count(&self, p: usize) -> u128 {
        word_count(p, self.min_degree, self.max_degree)
    }

    /// Number of words actually enumerated, or `BudgetOverflow`.
    pub fn effective_count(&self, p: usize) -> Result<u128> {
        let count = self.count(p);
        match self.max_words {
            Some(cap) if count > cap as u128 => {
                if self.truncate {
                    Ok(cap as u128)
                } else {
                    Err(Error::BudgetOverflow { count, max_words: cap })
                }
            }
            _ => Ok(count),
        }
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `Σ_{d=M}^{D} C(d+p−1, p−1)`, saturating at `u128::MAX`.
pub fn word_count(p: usize, min_degree: u64, max_degree: u64) -> u128 {
    if p == 0 || max_degree < min_degree {
        return 0;
    }
    let p = p as u64;
    let above = |d: u64| binomial(d + p, p);
    let upper = above(max_degree);
    let lower = if min_degree == 0 { 0 } else { above(min_degree - 1) };
    upper.saturating_sub(lower)
}

/// Enumeration order: total degree first, then larger leading exponents first.
pub fn rank_cmp(a: &[u64], b: &[u64]) -> Ordering {
    let da: u64 = a.iter().sum();
    let db: u64 = b.iter().sum();
    da.cmp(&db).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            if x != y {
                return y.cmp(x);
            }
        }
        Ordering::Equal
    })
}

/// Streams words of `p` generators in degree-major order.
#[derive(Clone, Debug)]
pub struct Words {
    current: Option<Vec<u64>>,
    max_degree: u64,
    remaining: u128,
}

impl Iterator for Words {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.remaining == 0 {
            return None;
        }
        let cur = self.current.as_mut()?;
        let out = Word::new(cur.clone());
        self.remaining -= 1;
        if !advance(cur, self.max_degree) {
            self.current = None;
        }
        Some(out)
    }
}

/// Steps to the next composition in enumeration order; false when exhausted.
pub(crate) fn advance(k: &mut [u64], max_degree: u64) -> bool {
    let p = k.len();
    let tail = k[p - 1];
    k[p - 1] = 0;
    if let Some(i) = (0..p - 1).rev().find(|&i| k[i] > 0) {
        k[i] -= 1;
        k[i + 1] = tail + 1;
        return true;
    }
    let d = tail + 1;
    if d > max_degree {
        return false;
    }
    k[0] = d;
    true
}

pub fn enumerate_words(p: usize, budget: &WordBudget) -> Result<Words> {
    if p == 0 {
        return Err(Error::InvalidArgument("a word needs at least one generator"));
    }
    let remaining = budget.effective_count(p)?;
    let current = if budget.is_empty() {
        None
    } else {
        let mut start = vec![0; p];
        start[0] = budget.min_degree;
        Some(start)
    };
    Ok(Words { current, max_degree: budget.max_degree, remaining })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exps(p: usize, b: WordBudget) -> Vec<Vec<u64>> {
        enumerate_words(p, &b).unwrap().map(|w| w.exponents().to_vec()).collect()
    }

    #[test]
    fn degree_major_order() {
        assert_eq!(
            exps(2, WordBudget::new(0, 2)),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(exps(2, WordBudget::new(1, 2)).len(), 5);
        assert_eq!(exps(3, WordBudget::new(0, 4)).len(), 35);
        assert_eq!(word_count(3, 0, 4), 35);
        assert!(exps(2, WordBudget::new(3, 2)).is_empty());
    }

    #[test]
    fn cap_behaviour() {
        let b = WordBudget::new(0, 4).with_cap(10, false);
        assert!(matches!(enumerate_words(3, &b), Err(Error::BudgetOverflow { count: 35, max_words: 10 })));
        let b = WordBudget::new(0, 4).with_cap(10, true);
        assert_eq!(exps(3, b), exps(3, WordBudget::new(0, 4))[..10].to_vec());
    }

    #[test]
    fn rank_order_matches_stream() {
        let all = exps(3, WordBudget::new(0, 5));
        for w in all.windows(2) {
            assert_eq!(rank_cmp(&w[0], &w[1]), Ordering::Less);
        }
    }
}
