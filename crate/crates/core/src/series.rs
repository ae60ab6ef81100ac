//! Formal Dirichlet-polynomial algebra over ℳ(ℙ).
//!
//! Coefficients are kept in canonical sparse form (no stored coefficient below the
//! pruning threshold) keyed by prime-exponent vectors, so single-prime chains can
//! reach degrees far beyond what a 64-bit index value could hold. Truncation bounds
//! live in log space for the same reason; every u64-facing accessor fails loudly
//! instead of wrapping.

use crate::indices::{enumerate_smooth_exponents, factor_over, Exponents, PrimeSupport};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

/// Coefficient magnitudes below this are pruned during canonicalization.
pub const PRUNE_EPS: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("operands have mismatched prime supports")]
    SupportMismatch,
    #[error("index {0} does not factor over the support")]
    NotSmooth(u64),
    #[error("exp_series requires zero coefficient at index 1, got magnitude {0}")]
    NonzeroConstant(f64),
    #[error("character has {got} angles but the support has {want} primes")]
    CharacterMismatch { got: usize, want: usize },
    #[error("index exceeds the truncation bound")]
    BeyondBound,
}

/// Truncation bound on index values, stored as a log so single-prime chains can
/// exceed u64 range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexBound {
    log_value: f64,
}

impl IndexBound {
    const SLACK: f64 = 1e-9;

    pub fn from_index(n: u64) -> Self {
        assert!(n >= 1);
        Self { log_value: (n as f64).ln() }
    }

    pub fn from_log(log_value: f64) -> Self {
        Self { log_value }
    }

    pub fn from_prime_power(p: u64, k: u32) -> Self {
        Self { log_value: k as f64 * (p as f64).ln() }
    }

    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    pub fn admits_log(&self, log_n: f64) -> bool {
        log_n <= self.log_value + Self::SLACK
    }

    pub fn admits(&self, e: &Exponents, support: &PrimeSupport) -> bool {
        self.admits_log(e.log_value(support))
    }

    /// Largest k with p^k within the bound.
    pub fn max_degree(&self, log_p: f64) -> usize {
        if self.log_value < 0.0 {
            return 0;
        }
        ((self.log_value + Self::SLACK) / log_p).floor() as usize
    }
}

/// Finitely supported coefficient map n ↦ b_n over ℳ(ℙ).
#[derive(Debug, Clone)]
pub struct DirichletPolynomial {
    support: PrimeSupport,
    terms: BTreeMap<Exponents, Complex64>,
    bound: IndexBound,
}

impl DirichletPolynomial {
    pub fn zero(support: PrimeSupport, bound: IndexBound) -> Self {
        Self { support, terms: BTreeMap::new(), bound }
    }

    pub fn constant(support: PrimeSupport, c: Complex64, bound: IndexBound) -> Self {
        let mut out = Self::zero(support, bound);
        if c.norm() > PRUNE_EPS {
            let one = Exponents::one(out.support.dimension());
            out.terms.insert(one, c);
        }
        out
    }

    pub fn from_index_coeffs(
        support: PrimeSupport,
        coeffs: &[(u64, Complex64)],
        bound: IndexBound,
    ) -> Result<Self, SeriesError> {
        let mut out = Self::zero(support, bound);
        for &(n, c) in coeffs {
            out.set_index_coeff(n, c)?;
        }
        Ok(out)
    }

    pub fn support(&self) -> &PrimeSupport {
        &self.support
    }

    pub fn bound(&self) -> IndexBound {
        self.bound
    }

    pub fn set_bound(&mut self, bound: IndexBound) {
        self.bound = bound;
        let support = self.support.clone();
        self.terms.retain(|e, _| bound.admits(e, &support));
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn set_index_coeff(&mut self, n: u64, c: Complex64) -> Result<(), SeriesError> {
        let e = factor_over(&self.support, n).ok_or(SeriesError::NotSmooth(n))?;
        if !self.bound.admits(&e, &self.support) {
            return Err(SeriesError::BeyondBound);
        }
        self.set_exp_coeff(e, c);
        Ok(())
    }

    pub fn set_exp_coeff(&mut self, e: Exponents, c: Complex64) {
        if c.norm() <= PRUNE_EPS {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, c);
        }
    }

    pub fn coeff_exp(&self, e: &Exponents) -> Complex64 {
        self.terms.get(e).copied().unwrap_or_default()
    }

    pub fn coeff_index(&self, n: u64) -> Complex64 {
        match factor_over(&self.support, n) {
            Some(e) => self.coeff_exp(&e),
            None => Complex64::default(),
        }
    }

    /// Coefficient at index 1.
    pub fn constant_coeff(&self) -> Complex64 {
        self.coeff_exp(&Exponents::one(self.support.dimension()))
    }

    /// The polynomial minus its constant term.
    pub fn without_constant(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&Exponents::one(self.support.dimension()));
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Complex64)> {
        self.terms.iter()
    }

    /// Terms sorted by index value (log), ties by exponent order.
    pub fn sorted_terms(&self) -> Vec<(Exponents, f64, Complex64)> {
        let mut v: Vec<_> = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), e.log_value(&self.support), *c))
            .collect();
        v.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        v
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= a;
        }
        out.canonicalize();
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.support != other.support {
            return Err(SeriesError::SupportMismatch);
        }
        let mut out = self.clone();
        for (e, c) in &other.terms {
            let entry = out.terms.entry(e.clone()).or_default();
            *entry += c;
        }
        out.canonicalize();
        Ok(out)
    }

    fn canonicalize(&mut self) {
        self.terms.retain(|_, c| c.norm() > PRUNE_EPS);
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Dense coefficient chain by degree for supports of dimension ≤ 1.
    /// Index k holds the coefficient of p^k.
    pub fn chain_coeffs(&self) -> Option<Vec<Complex64>> {
        if self.support.dimension() > 1 {
            return None;
        }
        let max_deg = self
            .terms
            .keys()
            .map(|e| e.0.first().copied().unwrap_or(0))
            .max()
            .unwrap_or(0) as usize;
        let mut out = vec![Complex64::default(); max_deg + 1];
        for (e, c) in &self.terms {
            out[e.0.first().copied().unwrap_or(0) as usize] = *c;
        }
        Some(out)
    }

    pub fn from_chain(
        support: PrimeSupport,
        chain: &[Complex64],
        bound: IndexBound,
    ) -> Self {
        debug_assert!(support.dimension() <= 1);
        let mut out = Self::zero(support, bound);
        for (k, &c) in chain.iter().enumerate() {
            if c.norm() > PRUNE_EPS {
                if out.support.dimension() == 0 {
                    if k == 0 {
                        out.terms.insert(Exponents(vec![]), c);
                    }
                } else {
                    out.terms.insert(Exponents(vec![k as u32]), c);
                }
            }
        }
        out
    }

    /// Pointwise value of the finite sum at s.
    pub fn evaluate(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::default();
        for (e, c) in &self.terms {
            let log_n = e.log_value(&self.support);
            acc += c * (-s * log_n).exp();
        }
        acc
    }

    /// f'(s) = -Σ b_n (log n) n^{-s}.
    pub fn evaluate_derivative(&self, s: Complex64) -> Complex64 {
        let mut acc = Complex64::default();
        for (e, c) in &self.terms {
            let log_n = e.log_value(&self.support);
            acc -= c * log_n * (-s * log_n).exp();
        }
        acc
    }
}

/// Finite character restriction: one angle in [0, 2π) per supported prime.
#[derive(Debug, Clone, PartialEq)]
pub struct Character {
    pub angles: Vec<f64>,
}

impl Character {
    pub fn trivial(dim: usize) -> Self {
        Self { angles: vec![0.0; dim] }
    }

    /// χ(n) = ∏ χ_p^{e_p}, unimodular.
    pub fn apply(&self, e: &Exponents) -> Complex64 {
        let phase: f64 = e
            .0
            .iter()
            .zip(&self.angles)
            .map(|(&k, &th)| k as f64 * th)
            .sum();
        Complex64::from_polar(1.0, phase)
    }
}

/// Coefficientwise twist b_n ↦ b_n χ(n); support and truncation unchanged.
pub fn twist(f: &DirichletPolynomial, chi: &Character) -> Result<DirichletPolynomial, SeriesError> {
    if chi.angles.len() != f.support.dimension() {
        return Err(SeriesError::CharacterMismatch {
            got: chi.angles.len(),
            want: f.support.dimension(),
        });
    }
    let mut out = f.clone();
    for (e, c) in out.terms.iter_mut() {
        *c *= chi.apply(e);
    }
    Ok(out)
}

/// Dirichlet convolution truncated to the bound: (f·g)_m = Σ_{kl=m} f_k g_l.
pub fn multiply(
    f: &DirichletPolynomial,
    g: &DirichletPolynomial,
    bound: IndexBound,
) -> Result<DirichletPolynomial, SeriesError> {
    if f.support != g.support {
        return Err(SeriesError::SupportMismatch);
    }
    if f.support.dimension() <= 1 {
        let (a, b) = (f.chain_coeffs().unwrap(), g.chain_coeffs().unwrap());
        let log_p = f.support.log_primes().first().copied().unwrap_or(1.0);
        let m_cap = if f.support.dimension() == 0 {
            0
        } else {
            bound.max_degree(log_p)
        };
        let mut out = vec![Complex64::default(); (a.len() + b.len()).saturating_sub(1).min(m_cap + 1)];
        for (i, &ai) in a.iter().enumerate() {
            if ai.norm() <= PRUNE_EPS {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if i + j < out.len() {
                    out[i + j] += ai * bj;
                }
            }
        }
        return Ok(DirichletPolynomial::from_chain(f.support.clone(), &out, bound));
    }
    let mut out = DirichletPolynomial::zero(f.support.clone(), bound);
    for (e1, c1) in &f.terms {
        for (e2, c2) in &g.terms {
            let e = e1.mul(e2);
            if bound.admits(&e, &f.support) {
                let entry = out.terms.entry(e).or_default();
                *entry += c1 * c2;
            }
        }
    }
    out.canonicalize();
    Ok(out)
}

/// Exponential of a Dirichlet polynomial with vanishing constant term, truncated to
/// the bound. Uses the log-weighted recursion g_m log m = Σ_{kl=m, k>1} f_k (log k) g_l,
/// which matches Σ_{r≥0} f^r / r! on every retained index.
pub fn exp_series(
    f: &DirichletPolynomial,
    bound: IndexBound,
) -> Result<DirichletPolynomial, SeriesError> {
    let c0 = f.constant_coeff();
    if c0.norm() > PRUNE_EPS {
        return Err(SeriesError::NonzeroConstant(c0.norm()));
    }
    if f.support.dimension() <= 1 {
        let chain = f.chain_coeffs().unwrap();
        let log_p = f.support.log_primes().first().copied().unwrap_or(1.0);
        let m_cap = if f.support.dimension() == 0 {
            0
        } else {
            bound.max_degree(log_p)
        };
        let g = exp_chain(&chain, m_cap);
        return Ok(DirichletPolynomial::from_chain(f.support.clone(), &g, bound));
    }

    // Generic path: enumerate the retained basis in increasing index order.
    let basis = enumerate_smooth_exponents(&f.support, bound.log_value());
    let mut pos = std::collections::HashMap::with_capacity(basis.len());
    for (i, (e, _)) in basis.iter().enumerate() {
        pos.insert(e.clone(), i);
    }
    let f_terms: Vec<(Exponents, f64, Complex64)> = f
        .sorted_terms()
        .into_iter()
        .filter(|(e, _, _)| !e.is_one())
        .collect();
    let mut g = vec![Complex64::default(); basis.len()];
    g[0] = Complex64::new(1.0, 0.0);
    for (i, (e_m, log_m)) in basis.iter().enumerate().skip(1) {
        let mut acc = Complex64::default();
        for (e_k, log_k, f_k) in &f_terms {
            if let Some(e_l) = e_m.div(e_k) {
                let l_idx = pos[&e_l];
                acc += f_k * *log_k * g[l_idx];
            }
        }
        g[i] = acc / *log_m;
    }
    let mut out = DirichletPolynomial::zero(f.support.clone(), bound);
    for ((e, _), c) in basis.into_iter().zip(g) {
        out.set_exp_coeff(e, c);
    }
    Ok(out)
}

/// Dense single-prime exponential: the log weights cancel to
/// g_b = (1/b) Σ_{a=1..min(b,K)} a f_a g_{b-a}.
pub fn exp_chain(f: &[Complex64], max_deg: usize) -> Vec<Complex64> {
    let mut g = vec![Complex64::default(); max_deg + 1];
    g[0] = Complex64::new(1.0, 0.0);
    let k_max = f.len().saturating_sub(1);
    for b in 1..=max_deg {
        let mut acc = Complex64::default();
        let a_hi = b.min(k_max);
        for a in 1..=a_hi {
            let fa = f[a];
            if fa.re != 0.0 || fa.im != 0.0 {
                acc += fa * (a as f64) * g[b - a];
            }
        }
        g[b] = acc / b as f64;
    }
    g
}

/// Coefficients d_m of n^{-φ₀(s)} = n^{-c₁} exp(-(log n) ψ), ψ = φ₀ - c₁.
pub fn power_symbol(
    n: u64,
    phi0: &DirichletPolynomial,
    bound: IndexBound,
) -> Result<DirichletPolynomial, SeriesError> {
    assert!(n >= 1);
    power_symbol_log((n as f64).ln(), phi0, bound)
}

/// Same as `power_symbol` with n given by its natural log, so block indices jk need
/// never be materialized.
pub fn power_symbol_log(
    ln_n: f64,
    phi0: &DirichletPolynomial,
    bound: IndexBound,
) -> Result<DirichletPolynomial, SeriesError> {
    let c1 = phi0.constant_coeff();
    let psi = phi0.without_constant();
    let scaled = psi.scale(Complex64::new(-ln_n, 0.0));
    let e = exp_series(&scaled, bound)?;
    // n^{-c1} = exp(-c1 ln n)
    let scalar = (-c1 * ln_n).exp();
    Ok(e.scale(scalar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::PrimeSupport;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sup(ps: &[u64]) -> PrimeSupport {
        PrimeSupport::new(ps.to_vec()).unwrap()
    }

    fn poly(support: &PrimeSupport, coeffs: &[(u64, Complex64)], n: u64) -> DirichletPolynomial {
        DirichletPolynomial::from_index_coeffs(support.clone(), coeffs, IndexBound::from_index(n))
            .unwrap()
    }

    /// Brute-force Dirichlet convolution over u64 indices, the independent oracle.
    fn brute_multiply(
        f: &DirichletPolynomial,
        g: &DirichletPolynomial,
        n_max: u64,
    ) -> Vec<(u64, Complex64)> {
        let mut acc = std::collections::BTreeMap::new();
        for (e1, c1) in f.terms() {
            for (e2, c2) in g.terms() {
                let v = e1.mul(e2).value(f.support()).unwrap();
                if v <= n_max {
                    *acc.entry(v).or_insert(Complex64::default()) += c1 * c2;
                }
            }
        }
        acc.into_iter().filter(|(_, c)| c.norm() > 1e-14).collect()
    }

    #[test]
    fn multiply_square_of_one_plus_two() {
        let s = sup(&[2]);
        let f = poly(&s, &[(1, c(1.0, 0.0)), (2, c(1.0, 0.0))], 4);
        let p = multiply(&f, &f, IndexBound::from_index(4)).unwrap();
        assert_eq!(p.coeff_index(1), c(1.0, 0.0));
        assert_eq!(p.coeff_index(2), c(2.0, 0.0));
        assert_eq!(p.coeff_index(4), c(1.0, 0.0));
        assert_eq!(p.num_terms(), 3);
    }

    #[test]
    fn multiply_identity_element() {
        let s = sup(&[2, 3]);
        let f = poly(&s, &[(2, c(0.5, 1.0)), (9, c(-2.0, 0.25))], 9);
        let one = DirichletPolynomial::constant(s.clone(), c(1.0, 0.0), IndexBound::from_index(9));
        let p = multiply(&f, &one, IndexBound::from_index(9)).unwrap();
        for n in [1u64, 2, 3, 6, 9] {
            assert!((p.coeff_index(n) - f.coeff_index(n)).norm() < 1e-15);
        }
    }

    #[test]
    fn multiply_two_plus_three_squared_matches_brute_force() {
        let s = sup(&[2, 3]);
        let f = poly(&s, &[(2, c(1.0, 0.0)), (3, c(1.0, 0.0))], 9);
        let p = multiply(&f, &f, IndexBound::from_index(9)).unwrap();
        let brute = brute_multiply(&f, &f, 9);
        assert_eq!(brute.len(), 3);
        for (n, want) in brute {
            assert!((p.coeff_index(n) - want).norm() < 1e-15, "at {n}");
        }
        assert_eq!(p.coeff_index(4), c(1.0, 0.0));
        assert_eq!(p.coeff_index(6), c(2.0, 0.0));
        assert_eq!(p.coeff_index(9), c(1.0, 0.0));
    }

    #[test]
    fn multiply_rejects_mismatched_supports() {
        let f = poly(&sup(&[2]), &[(2, c(1.0, 0.0))], 4);
        let g = poly(&sup(&[3]), &[(3, c(1.0, 0.0))], 4);
        assert!(matches!(
            multiply(&f, &g, IndexBound::from_index(4)),
            Err(SeriesError::SupportMismatch)
        ));
    }

    #[test]
    fn exp_of_zero_is_one() {
        let s = sup(&[2, 3]);
        let z = DirichletPolynomial::zero(s, IndexBound::from_index(10));
        let e = exp_series(&z, IndexBound::from_index(10)).unwrap();
        assert_eq!(e.num_terms(), 1);
        assert_eq!(e.coeff_index(1), c(1.0, 0.0));
    }

    #[test]
    fn exp_rejects_nonzero_constant() {
        let s = sup(&[2]);
        let f = poly(&s, &[(1, c(0.5, 0.0))], 4);
        assert!(matches!(
            exp_series(&f, IndexBound::from_index(4)),
            Err(SeriesError::NonzeroConstant(_))
        ));
    }

    #[test]
    fn exp_single_prime_geometric_chain() {
        // exp(a 2^{-s}) has coefficient a^k/k! at 2^{-ks}.
        let s = sup(&[2]);
        let a = c(0.7, -0.3);
        let f = poly(&s, &[(2, a)], 2);
        let bound = IndexBound::from_prime_power(2, 12);
        let e = exp_series(&f, bound).unwrap();
        let mut expect = c(1.0, 0.0);
        for k in 0..=12u32 {
            if k > 0 {
                expect *= a / k as f64;
            }
            let got = e.coeff_exp(&Exponents(vec![k]));
            assert!((got - expect).norm() < 1e-14 * expect.norm().max(1.0), "k={k}");
        }
    }

    #[test]
    fn exp_matches_partial_sum_oracle() {
        // Brute-force oracle: Σ_{r=0}^{R} f^r/r! with R chosen so the l1 tail
        // ‖f‖₁^{R+1}/(R+1)! < 1e-14.
        let s = sup(&[2, 3]);
        let f = poly(&s, &[(2, c(1.0, 0.0)), (3, c(1.0, 0.0))], 36);
        let bound = IndexBound::from_index(36);
        let l1: f64 = 2.0;
        let mut r_max = 1usize;
        let mut tail = l1;
        while tail >= 1e-14 {
            r_max += 1;
            tail *= l1 / (r_max + 1) as f64;
        }
        let mut partial =
            DirichletPolynomial::constant(s.clone(), c(1.0, 0.0), bound);
        let mut power = DirichletPolynomial::constant(s.clone(), c(1.0, 0.0), bound);
        let mut factorial = 1.0f64;
        for r in 1..=r_max {
            power = multiply(&power, &f, bound).unwrap();
            factorial *= r as f64;
            partial = partial.add(&power.scale(c(1.0 / factorial, 0.0))).unwrap();
        }
        let e = exp_series(&f, bound).unwrap();
        for (exps, _, want) in partial.sorted_terms() {
            let got = e.coeff_exp(&exps);
            assert!(
                (got - want).norm() < 1e-13,
                "mismatch at {:?}: {got} vs {want}",
                exps
            );
        }
    }

    #[test]
    fn power_symbol_n_one_is_constant_one() {
        let s = sup(&[2]);
        let phi0 = poly(&s, &[(1, c(0.5, 0.2)), (2, c(-0.25, 0.0))], 4);
        let d = power_symbol(1, &phi0, IndexBound::from_prime_power(2, 8)).unwrap();
        assert_eq!(d.num_terms(), 1);
        assert!((d.coeff_index(1) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn power_symbol_constant_phi0_is_diagonal() {
        let s = sup(&[2]);
        let c1 = c(0.75, 0.4);
        let phi0 = poly(&s, &[(1, c1)], 2);
        for n in [2u64, 5, 144] {
            let d = power_symbol(n, &phi0, IndexBound::from_prime_power(2, 8)).unwrap();
            assert_eq!(d.num_terms(), 1);
            let want = (-c1 * (n as f64).ln()).exp();
            assert!((d.coeff_index(1) - want).norm() < 1e-14);
        }
    }

    #[test]
    fn power_symbol_two_exp_oracle() {
        // n=2, φ₀(s) = 2^{-s}: coefficient at 2^{-ks} is (-log 2)^k / k!.
        let s = sup(&[2]);
        let phi0 = poly(&s, &[(2, c(1.0, 0.0))], 2);
        let d = power_symbol(2, &phi0, IndexBound::from_prime_power(2, 16)).unwrap();
        let l = 2f64.ln();
        let mut expect = 1.0f64;
        for k in 0..=16u32 {
            if k > 0 {
                expect *= -l / k as f64;
            }
            let got = d.coeff_exp(&Exponents(vec![k]));
            assert!((got - c(expect, 0.0)).norm() < 1e-15 + 1e-13 * expect.abs(), "k={k}");
        }
    }

    #[test]
    fn power_symbol_is_completely_multiplicative() {
        let s = sup(&[2, 3]);
        let phi0 = poly(
            &s,
            &[(1, c(0.6, 0.1)), (2, c(-0.2, 0.05)), (3, c(0.1, -0.3))],
            3,
        );
        let bound = IndexBound::from_index(2000);
        for (m, n) in [(2u64, 3u64), (4, 5), (6, 6)] {
            let dm = power_symbol(m, &phi0, bound).unwrap();
            let dn = power_symbol(n, &phi0, bound).unwrap();
            let dmn = power_symbol(m * n, &phi0, bound).unwrap();
            let prod = multiply(&dm, &dn, bound).unwrap();
            for (e, _, want) in dmn.sorted_terms() {
                let got = prod.coeff_exp(&e);
                assert!((got - want).norm() < 1e-12, "m={m} n={n} at {:?}", e);
            }
        }
    }

    #[test]
    fn evaluate_basics() {
        let s = sup(&[2]);
        let one = DirichletPolynomial::constant(s.clone(), c(1.0, 0.0), IndexBound::from_index(1));
        assert_eq!(one.evaluate(c(3.7, -2.0)), c(1.0, 0.0));
        let f = poly(&s, &[(2, c(1.0, 0.0))], 2);
        assert!((f.evaluate(c(1.0, 0.0)) - c(0.5, 0.0)).norm() < 1e-15);
        let d = f.evaluate_derivative(c(0.0, 0.0));
        assert!((d - c(-(2f64.ln()), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn twist_basics() {
        let s = sup(&[2]);
        let f = poly(&s, &[(2, c(1.0, 0.0))], 2);
        let trivial = Character::trivial(1);
        let t = twist(&f, &trivial).unwrap();
        assert_eq!(t.coeff_index(2), c(1.0, 0.0));
        let pi = Character { angles: vec![std::f64::consts::PI] };
        let t = twist(&f, &pi).unwrap();
        assert!((t.coeff_index(2) - c(-1.0, 0.0)).norm() < 1e-15);
        let bad = Character { angles: vec![0.0, 0.0] };
        assert!(twist(&f, &bad).is_err());
    }

    #[test]
    fn evaluate_twist_trivial_character_unchanged() {
        let s = sup(&[2, 3]);
        let f = poly(&s, &[(2, c(0.3, 0.7)), (9, c(-1.0, 0.1))], 9);
        let t = twist(&f, &Character::trivial(2)).unwrap();
        let pt = c(0.4, 1.3);
        assert!((t.evaluate(pt) - f.evaluate(pt)).norm() < 1e-15);
    }

    #[test]
    fn carlson_strip_average_matches_coefficient_sum() {
        // (log 2 / 2π) ∫ |f(σ+it)|² dt over one period equals Σ |b_n|² n^{-2σ}
        // for chains over a single prime; checked by periodic trapezoid quadrature.
        let s = sup(&[2]);
        let f = poly(
            &s,
            &[(1, c(0.5, 0.0)), (2, c(1.0, -0.5)), (8, c(-0.25, 0.1))],
            8,
        );
        let sigma = 0.3;
        let parseval: f64 = f
            .sorted_terms()
            .iter()
            .map(|(e, logn, coeff)| {
                let _ = e;
                coeff.norm_sqr() * (-2.0 * sigma * logn).exp()
            })
            .sum();
        let period = 2.0 * std::f64::consts::PI / 2f64.ln();
        let m = 64usize;
        let mut acc = 0.0;
        for i in 0..m {
            let t = -period / 2.0 + period * i as f64 / m as f64;
            acc += f.evaluate(c(sigma, t)).norm_sqr();
        }
        let average = acc / m as f64;
        assert!(
            (average - parseval).abs() < 1e-10,
            "quad {average} vs parseval {parseval}"
        );
    }

    fn arb_poly(max_terms: usize) -> impl Strategy<Value = DirichletPolynomial> {
        let idx = prop::sample::select(vec![1u64, 2, 3, 4, 6, 8, 9, 12, 16, 18, 24]);
        prop::collection::vec((idx, -2.0..2.0f64, -2.0..2.0f64), 1..max_terms).prop_map(|ts| {
            let s = sup(&[2, 3]);
            let mut p = DirichletPolynomial::zero(s, IndexBound::from_index(24));
            for (n, re, im) in ts {
                let prev = p.coeff_index(n);
                p.set_index_coeff(n, prev + c(re, im)).unwrap();
            }
            p
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn multiply_commutes(f in arb_poly(6), g in arb_poly(6)) {
            let bound = IndexBound::from_index(24 * 24);
            let fg = multiply(&f, &g, bound).unwrap();
            let gf = multiply(&g, &f, bound).unwrap();
            for (e, _, want) in fg.sorted_terms() {
                prop_assert!((gf.coeff_exp(&e) - want).norm() < 1e-12);
            }
            prop_assert_eq!(fg.num_terms(), gf.num_terms());
        }

        #[test]
        fn multiply_associates(f in arb_poly(5), g in arb_poly(5), h in arb_poly(5)) {
            let bound = IndexBound::from_index(24u64.pow(3));
            let a = multiply(&multiply(&f, &g, bound).unwrap(), &h, bound).unwrap();
            let b = multiply(&f, &multiply(&g, &h, bound).unwrap(), bound).unwrap();
            for (e, _, want) in a.sorted_terms() {
                prop_assert!((b.coeff_exp(&e) - want).norm() < 1e-12);
            }
        }

        #[test]
        fn twist_preserves_magnitudes(f in arb_poly(6), th1 in 0.0..std::f64::consts::TAU, th2 in 0.0..std::f64::consts::TAU) {
            let chi = Character { angles: vec![th1, th2] };
            let t = twist(&f, &chi).unwrap();
            for (e, _, coeff) in f.sorted_terms() {
                prop_assert!((t.coeff_exp(&e).norm() - coeff.norm()).abs() < 1e-14);
            }
        }

        #[test]
        fn exp_is_additive_on_disjoint_supports(a_re in -1.5..1.5f64, b_re in -1.5..1.5f64) {
            // f supported on {2}, g on {3}, embedded in the common support {2,3}.
            let s = sup(&[2, 3]);
            let bound = IndexBound::from_index(6u64.pow(7));
            let f = poly(&s, &[(2, c(a_re, 0.3))], 2);
            let g = poly(&s, &[(3, c(b_re, -0.2))], 3);
            let sum = f.add(&g).unwrap();
            let lhs = exp_series(&sum, bound).unwrap();
            let rhs = multiply(
                &exp_series(&f, bound).unwrap(),
                &exp_series(&g, bound).unwrap(),
                bound,
            )
            .unwrap();
            for (e, _, want) in lhs.sorted_terms() {
                prop_assert!((rhs.coeff_exp(&e) - want).norm() < 1e-10);
            }
        }
    }
}
