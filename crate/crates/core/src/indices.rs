//! Prime supports, smooth-index enumeration, factorization, and partial zeta values.
//!
//! A support ℙ is a finite, strictly increasing list of primes. ℳ(ℙ) is the set of
//! positive integers whose prime factors all lie in ℙ; its complement view ℳ(ℙ^⊥)
//! indexes the orthogonal blocks of the composition operator.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime list must be strictly increasing")]
    NotIncreasing,
    #[error("bound must be >= 1")]
    EmptyRange,
    #[error("index arithmetic overflowed 64 bits ({context})")]
    Capacity { context: &'static str },
    #[error("partial zeta requires nu > 0, got {0}")]
    ZetaDomain(f64),
}

/// Deterministic Miller-Rabin, complete for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// A finite set ℙ of primes. The empty support is allowed (then ℳ(ℙ) = {1}).
#[derive(Debug, Clone)]
pub struct PrimeSupport {
    primes: Vec<u64>,
    log_primes: Vec<f64>,
}

impl PartialEq for PrimeSupport {
    fn eq(&self, other: &Self) -> bool {
        self.primes == other.primes
    }
}

impl Eq for PrimeSupport {}

impl PrimeSupport {
    pub fn new(primes: Vec<u64>) -> Result<Self, IndexError> {
        for w in primes.windows(2) {
            if w[0] >= w[1] {
                return Err(IndexError::NotIncreasing);
            }
        }
        for &p in &primes {
            if !is_prime(p) {
                return Err(IndexError::NotPrime(p));
            }
        }
        let log_primes = primes.iter().map(|&p| (p as f64).ln()).collect();
        Ok(Self { primes, log_primes })
    }

    pub fn empty() -> Self {
        Self { primes: Vec::new(), log_primes: Vec::new() }
    }

    pub fn single(p: u64) -> Result<Self, IndexError> {
        Self::new(vec![p])
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn log_primes(&self) -> &[f64] {
        &self.log_primes
    }

    pub fn dimension(&self) -> usize {
        self.primes.len()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    /// True when gcd(n, p) = 1 for every p in the support.
    pub fn is_coprime(&self, n: u64) -> bool {
        self.primes.iter().all(|&p| n % p != 0)
    }

    /// ζ_ℙ(ν) = ∏_{p∈ℙ} (1 - p^{-ν})^{-1}, exact finite product.
    pub fn partial_zeta(&self, nu: f64) -> Result<f64, IndexError> {
        if !(nu > 0.0) {
            return Err(IndexError::ZetaDomain(nu));
        }
        let mut acc = 1.0;
        for &p in &self.primes {
            acc *= 1.0 / (1.0 - (p as f64).powf(-nu));
        }
        Ok(acc)
    }
}

/// Exponent vector over a support: n = ∏ p_i^{e_i}. The length always equals the
/// support dimension.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponents(pub Vec<u32>);

impl Exponents {
    pub fn one(dim: usize) -> Self {
        Exponents(vec![0; dim])
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Natural logarithm of the index value.
    pub fn log_value(&self, support: &PrimeSupport) -> f64 {
        self.0
            .iter()
            .zip(support.log_primes())
            .map(|(&e, &lp)| e as f64 * lp)
            .sum()
    }

    /// The index as a u64, or None on overflow.
    pub fn value(&self, support: &PrimeSupport) -> Option<u64> {
        let mut acc: u64 = 1;
        for (&e, &p) in self.0.iter().zip(support.primes()) {
            for _ in 0..e {
                acc = acc.checked_mul(p)?;
            }
        }
        Some(acc)
    }

    pub fn mul(&self, other: &Exponents) -> Exponents {
        Exponents(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    /// Componentwise division; None when `other` does not divide `self`.
    pub fn div(&self, other: &Exponents) -> Option<Exponents> {
        let mut out = Vec::with_capacity(self.0.len());
        for (&a, &b) in self.0.iter().zip(&other.0) {
            if b > a {
                return None;
            }
            out.push(a - b);
        }
        Some(Exponents(out))
    }

    pub fn pow(&self, k: u32) -> Exponents {
        Exponents(self.0.iter().map(|&e| e * k).collect())
    }

    /// Canonical display form, e.g. "2^3*5" or the decimal value when it fits.
    pub fn display(&self, support: &PrimeSupport) -> String {
        if let Some(v) = self.value(support) {
            return v.to_string();
        }
        let mut parts = Vec::new();
        for (&e, &p) in self.0.iter().zip(support.primes()) {
            match e {
                0 => {}
                1 => parts.push(format!("{p}")),
                _ => parts.push(format!("{p}^{e}")),
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

/// All n ∈ ℳ(ℙ) with n ≤ bound, sorted ascending.
#[derive(Debug, Clone)]
pub struct SmoothIndexList {
    pub support: PrimeSupport,
    pub bound: u64,
    pub indices: Vec<u64>,
}

/// Enumerate ℳ(ℙ) ∩ [1, n_max] by iterated multiplication (heap merge), not trial
/// division. Duplicate products are avoided by only multiplying each value by primes
/// at or above the largest prime already used.
pub fn enumerate_smooth(support: &PrimeSupport, n_max: u64) -> Result<SmoothIndexList, IndexError> {
    if n_max == 0 {
        return Err(IndexError::EmptyRange);
    }
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let primes = support.primes();
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    heap.push(Reverse((1, 0)));
    let mut out = Vec::new();
    while let Some(Reverse((v, min_idx))) = heap.pop() {
        out.push(v);
        for (i, &p) in primes.iter().enumerate().skip(min_idx) {
            if v <= n_max / p {
                heap.push(Reverse((v * p, i)));
            }
        }
    }
    Ok(SmoothIndexList { support: support.clone(), bound: n_max, indices: out })
}

/// Enumerate the exponent vectors of ℳ(ℙ) with log value ≤ log_bound, sorted by
/// (log value, exponents). This is the overflow-safe twin of `enumerate_smooth`.
pub fn enumerate_smooth_exponents(
    support: &PrimeSupport,
    log_bound: f64,
) -> Vec<(Exponents, f64)> {
    let dim = support.dimension();
    let mut out = Vec::new();
    let mut stack = vec![(Exponents::one(dim), 0.0f64, 0usize)];
    let slack = 1e-9;
    while let Some((e, lv, min_idx)) = stack.pop() {
        out.push((e.clone(), lv));
        for i in min_idx..dim {
            let lp = support.log_primes()[i];
            if lv + lp <= log_bound + slack {
                let mut next = e.clone();
                next.0[i] += 1;
                stack.push((next, lv + lp, i));
            }
        }
    }
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

/// All j ≤ j_max with gcd(j, p) = 1 for every p in the support, sorted.
pub fn enumerate_coprime(support: &PrimeSupport, j_max: u64) -> Result<Vec<u64>, IndexError> {
    if j_max == 0 {
        return Err(IndexError::EmptyRange);
    }
    Ok((1..=j_max).filter(|&j| support.is_coprime(j)).collect())
}

/// Iterator over ℳ(ℙ^⊥) in increasing order, unbounded.
pub fn coprime_iter(support: &PrimeSupport) -> impl Iterator<Item = u64> + '_ {
    (1u64..).filter(move |&j| support.is_coprime(j))
}

/// Exponents e_p with n = ∏ p^{e_p} if n ∈ ℳ(ℙ); None otherwise.
pub fn factor_over(support: &PrimeSupport, n: u64) -> Option<Exponents> {
    assert!(n >= 1, "factor_over requires n >= 1");
    let mut rem = n;
    let mut exps = vec![0u32; support.dimension()];
    for (i, &p) in support.primes().iter().enumerate() {
        while rem % p == 0 {
            rem /= p;
            exps[i] += 1;
        }
    }
    if rem == 1 {
        Some(Exponents(exps))
    } else {
        None
    }
}
