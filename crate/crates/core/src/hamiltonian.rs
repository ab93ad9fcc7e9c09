//! Per-spin view of an instance for single-flip updates.

use crate::instance::Instance;

/// A term seen from one of its spins: the coefficient and the (up to two)
/// other spins. Absent partners point at the sentinel slot `n`, which
/// always holds +1.
#[derive(Debug, Clone, Copy)]
struct LocalTerm {
    coef: f64,
    coef_half: i64,
    a: u32,
    b: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    n: usize,
    offsets: Vec<usize>,
    local: Vec<LocalTerm>,
    /// All coefficients are multiples of 1/2 (small enough for exact i64).
    half_integral: bool,
    /// Largest possible |dE| of a single flip, in half units.
    max_flip_half: i64,
}

impl Compiled {
    pub(crate) fn new(inst: &Instance) -> Self {
        let n = inst.n_spins();
        let sentinel = n as u32;
        let mut per_spin: Vec<Vec<LocalTerm>> = vec![Vec::new(); n];
        let half_integral = inst.terms().iter().all(|t| {
            let h = 2.0 * t.coefficient();
            h.fract() == 0.0 && h.abs() < 1e12
        });
        for t in inst.terms() {
            let s = t.support();
            let coef = t.coefficient();
            let coef_half = if half_integral { (2.0 * coef) as i64 } else { 0 };
            for (k, &i) in s.iter().enumerate() {
                let others: Vec<u32> = s
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != k)
                    .map(|(_, &j)| j as u32)
                    .collect();
                per_spin[i].push(LocalTerm {
                    coef,
                    coef_half,
                    a: others.first().copied().unwrap_or(sentinel),
                    b: others.get(1).copied().unwrap_or(sentinel),
                });
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut local = Vec::new();
        offsets.push(0);
        let mut max_flip_half = 0;
        for terms in per_spin {
            let sum: i64 = terms.iter().map(|t| t.coef_half.abs()).sum();
            max_flip_half = max_flip_half.max(2 * sum);
            local.extend(terms);
            offsets.push(local.len());
        }
        Compiled {
            n,
            offsets,
            local,
            half_integral,
            max_flip_half,
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn half_integral(&self) -> bool {
        self.half_integral
    }

    pub(crate) fn max_flip_half(&self) -> i64 {
        self.max_flip_half
    }

    /// Spin buffer with the trailing sentinel.
    pub(crate) fn spin_buffer(&self, spins: &[i8]) -> Vec<i32> {
        let mut buf: Vec<i32> = spins.iter().map(|&s| s as i32).collect();
        buf.push(1);
        buf
    }

    #[inline]
    fn terms_of(&self, i: usize) -> &[LocalTerm] {
        &self.local[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Energy change of flipping spin `i`.
    #[inline]
    pub(crate) fn flip_delta(&self, spins: &[i32], i: usize) -> f64 {
        let field: f64 = self
            .terms_of(i)
            .iter()
            .map(|t| t.coef * (spins[t.a as usize] * spins[t.b as usize]) as f64)
            .sum();
        -2.0 * spins[i] as f64 * field
    }

    /// Energy change of flipping spin `i`, in half units (exact).
    #[inline]
    pub(crate) fn flip_delta_half(&self, spins: &[i32], i: usize) -> i64 {
        let field: i64 = self
            .terms_of(i)
            .iter()
            .map(|t| t.coef_half * (spins[t.a as usize] * spins[t.b as usize]) as i64)
            .sum();
        -2 * spins[i] as i64 * field
    }

    /// Full energy in half units; only meaningful when `half_integral`.
    pub(crate) fn energy_half(&self, spins: &[i32]) -> i64 {
        // Each k-body term is seen from k spins.
        let mut e = 0i64;
        for i in 0..self.n {
            for t in self.terms_of(i) {
                let arity = 1 + (t.a as usize != self.n) as i64 + (t.b as usize != self.n) as i64;
                let v = t.coef_half * (spins[i] * spins[t.a as usize] * spins[t.b as usize]) as i64;
                // accumulate v / arity exactly by scaling with 6
                e += v * (6 / arity);
            }
        }
        e / 6
    }

    pub(crate) fn energy(&self, spins: &[i32]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            for t in self.terms_of(i) {
                // count each term once: only from its smallest index
                let a = t.a as usize;
                let b = t.b as usize;
                if (a == self.n || a > i) && (b == self.n || b > i) {
                    e += t.coef * (spins[i] * spins[a] * spins[b]) as f64;
                }
            }
        }
        e
    }
}
