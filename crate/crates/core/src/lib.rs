//! Numerical toolkit for composition operators C_φ f = f ∘ φ on the Hilbert space
//! of Dirichlet series with square-summable coefficients, for symbols
//! φ(s) = c₀s + φ₀(s) with integer c₀ ≥ 1.
//!
//! When φ₀ is supported on a prime set ℙ the operator decomposes orthogonally into
//! blocks indexed by the ℙ-free integers; this crate assembles those blocks,
//! computes merged singular-value spectra, evaluates ‖C_φ e_n‖ by independent
//! oracles, solves φ(s) = w for restricted Nevanlinna counting functions, and runs
//! the asymptotic-law experiment suites behind the `dircomp` CLI.

pub mod bessel;
pub mod counting;
pub mod indices;
pub mod lab;
pub mod operator;
pub mod quad;
pub mod series;
pub mod svd;
pub mod symbol;
