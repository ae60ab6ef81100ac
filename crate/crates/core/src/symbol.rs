//! Gordon-Hedenmalm symbols φ(s) = c₀s + φ₀(s) with integer c₀ ≥ 1 and
//! Re φ₀ ≥ 0 on the right half-plane.
//!
//! Three constructors: affine symbols (closed-form ϑ), angle maps
//! Φ_α(z) = ((1-z)/(1+z))^α composed with p^{-s} (ϑ = additive shift), and custom
//! coefficient lists (membership checked by boundary sampling, per the maximum
//! principle). Angle symbols keep their exact conformal form next to the truncated
//! Taylor polynomial: preimage solving and closed-form norm laws need the exact map,
//! while matrix assembly works from the polynomial.

use crate::indices::{Exponents, PrimeSupport};
use crate::series::{
    twist, Character, DirichletPolynomial, IndexBound, SeriesError, PRUNE_EPS,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error("c0 must be >= 1, got {0}")]
    C0OutOfRange(u32),
    #[error("not in the admissible class: Re c1 = {re_c1} < sum of |c_p| = {l1}")]
    AffineRejected { re_c1: f64, l1: f64 },
    #[error("alpha must lie in (0,1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("theta shift must be >= 0, got {0}")]
    NegativeShift(f64),
    #[error("taylor_order {given} is insufficient; tail bound needs at least {required}")]
    InsufficientTaylorOrder { given: usize, required: usize },
    #[error("taylor tail bound not reachable within order {0}; increase the budget")]
    TaylorTailUnreachable(usize),
    #[error("boundary sampling found Re phi0 = {min_re} < 0; not a valid symbol")]
    MappingViolation { min_re: f64 },
    #[error("symbol json is malformed: {0}")]
    Json(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Index(#[from] crate::indices::IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Affine,
    Angle,
    Custom,
}

/// Parameters of the angle map φ(s) = c₀s + ϑ + Φ_α(p^{-s}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleParams {
    pub alpha: f64,
    pub theta_shift: f64,
    pub prime: u64,
    pub taylor_order: usize,
}

#[derive(Debug, Clone)]
pub struct Symbol {
    c0: u32,
    phi0: DirichletPolynomial,
    vartheta: f64,
    kind: SymbolKind,
    angle: Option<AngleParams>,
}

impl Symbol {
    pub fn c0(&self) -> u32 {
        self.c0
    }

    pub fn phi0(&self) -> &DirichletPolynomial {
        &self.phi0
    }

    pub fn vartheta(&self) -> f64 {
        self.vartheta
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn angle_params(&self) -> Option<&AngleParams> {
        self.angle.as_ref()
    }

    pub fn support(&self) -> &PrimeSupport {
        self.phi0.support()
    }

    /// Re c₁ (the constant coefficient of φ₀).
    pub fn re_c1(&self) -> f64 {
        self.phi0.constant_coeff().re
    }

    /// ℓ¹ bound on |Im φ₀| over the closed right half-plane, when finite.
    /// None for exact angle maps (their image is an unbounded sector).
    pub fn im_phi0_bound(&self) -> Option<f64> {
        if self.kind == SymbolKind::Angle {
            return None;
        }
        let c1 = self.phi0.constant_coeff();
        Some(c1.im.abs() + self.phi0.without_constant().l1_norm())
    }

    /// Cheap lower bound on Re φ₀ over the closed right half-plane (triangle
    /// inequality for polynomials, the additive shift for exact angle maps).
    /// φ(s) = w has no solution with Re s > 0 when Re w ≤ this floor.
    pub fn re_phi0_floor(&self) -> f64 {
        if let Some(p) = &self.angle {
            return p.theta_shift;
        }
        let c1 = self.phi0.constant_coeff();
        c1.re - self.phi0.without_constant().l1_norm()
    }

    /// Replace φ₀ by its twist φ₀,χ. The twisted operator is unitarily equivalent,
    /// so spectra are preserved; the kind degrades to Custom unless χ is trivial.
    pub fn twisted(&self, chi: &Character) -> Result<Symbol, SymbolError> {
        let phi0 = twist(&self.phi0, chi)?;
        Ok(Symbol {
            c0: self.c0,
            phi0,
            vartheta: self.vartheta,
            kind: if chi.angles.iter().all(|&a| a == 0.0) {
                self.kind
            } else {
                SymbolKind::Custom
            },
            angle: None,
        })
    }

    pub fn evaluator(&self) -> SymbolEvaluator {
        SymbolEvaluator::new(self)
    }

    /// Canonical JSON form; round-trips exactly.
    pub fn to_json(&self) -> String {
        let support = self.support().primes().to_vec();
        let coefficients = self
            .phi0
            .sorted_terms()
            .into_iter()
            .map(|(e, _, c)| {
                let idx = match e.value(self.support()) {
                    Some(v) => IndexRepr::Num(v),
                    None => IndexRepr::Str(e.display(self.support())),
                };
                (idx, c.re, c.im)
            })
            .collect();
        let doc = SymbolJson {
            c0: self.c0,
            kind: self.kind,
            vartheta: self.vartheta,
            coefficients,
            meta: MetaJson {
                support,
                log_bound: self.phi0.bound().log_value(),
                angle: self.angle,
            },
        };
        serde_json::to_string(&doc).expect("symbol serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Symbol, SymbolError> {
        let doc: SymbolJson =
            serde_json::from_str(text).map_err(|e| SymbolError::Json(e.to_string()))?;
        let support = PrimeSupport::new(doc.meta.support.clone())?;
        if doc.kind == SymbolKind::Angle {
            let params = doc
                .meta
                .angle
                .ok_or_else(|| SymbolError::Json("angle symbol without angle meta".into()))?;
            let sym = make_angle(params, doc.c0)?;
            if (sym.vartheta - doc.vartheta).abs() > 1e-12 {
                return Err(SymbolError::Json("vartheta mismatch on angle reload".into()));
            }
            return Ok(sym);
        }
        let mut phi0 = DirichletPolynomial::zero(
            support.clone(),
            IndexBound::from_log(doc.meta.log_bound),
        );
        for (idx, re, im) in &doc.coefficients {
            let e = parse_index(idx, &support)
                .ok_or_else(|| SymbolError::Json(format!("bad index {idx:?}")))?;
            phi0.set_exp_coeff(e, Complex64::new(*re, *im));
        }
        if doc.c0 < 1 {
            return Err(SymbolError::C0OutOfRange(doc.c0));
        }
        Ok(Symbol {
            c0: doc.c0,
            phi0,
            vartheta: doc.vartheta,
            kind: doc.kind,
            angle: None,
        })
    }

    /// SHA-256 of the canonical JSON, for report provenance.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_json().as_bytes());
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    c0: u32,
    kind: SymbolKind,
    vartheta: f64,
    coefficients: Vec<(IndexRepr, f64, f64)>,
    meta: MetaJson,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(untagged)]
enum IndexRepr {
    Num(u64),
    Str(String),
}

#[derive(Serialize, Deserialize)]
struct MetaJson {
    support: Vec<u64>,
    log_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<AngleParams>,
}

fn parse_index(idx: &IndexRepr, support: &PrimeSupport) -> Option<Exponents> {
    match idx {
        IndexRepr::Num(n) => crate::indices::factor_over(support, *n),
        IndexRepr::Str(s) => {
            let mut exps = vec![0u32; support.dimension()];
            if s == "1" {
                return Some(Exponents(exps));
            }
            for part in s.split('*') {
                let (p, e) = match part.split_once('^') {
                    Some((p, e)) => (p.parse::<u64>().ok()?, e.parse::<u32>().ok()?),
                    None => (part.parse::<u64>().ok()?, 1),
                };
                let pos = support.primes().iter().position(|&q| q == p)?;
                exps[pos] += e;
            }
            Some(Exponents(exps))
        }
    }
}

/// Affine symbol φ(s) = c₀s + c₁ + Σ_p c_p p^{-s}. Requires Re c₁ ≥ Σ|c_p|; then
/// ϑ = Re c₁ - Σ|c_p| exactly.
pub fn make_affine(
    c0: u32,
    c1: Complex64,
    prime_coeffs: &[(u64, Complex64)],
) -> Result<Symbol, SymbolError> {
    if c0 < 1 {
        return Err(SymbolError::C0OutOfRange(c0));
    }
    let mut primes: Vec<u64> = prime_coeffs
        .iter()
        .filter(|(_, c)| c.norm() > PRUNE_EPS)
        .map(|&(p, _)| p)
        .collect();
    primes.sort_unstable();
    primes.dedup();
    let support = PrimeSupport::new(primes)?;
    let l1: f64 = prime_coeffs.iter().map(|(_, c)| c.norm()).sum();
    if c1.re < l1 {
        return Err(SymbolError::AffineRejected { re_c1: c1.re, l1 });
    }
    let max_p = support.primes().last().copied().unwrap_or(1);
    let mut phi0 = DirichletPolynomial::zero(support.clone(), IndexBound::from_index(max_p));
    let one = Exponents::one(support.dimension());
    phi0.set_exp_coeff(one, c1);
    for &(p, c) in prime_coeffs {
        if c.norm() > PRUNE_EPS {
            let prev = phi0.coeff_index(p);
            phi0.set_index_coeff(p, prev + c)?;
        }
    }
    Ok(Symbol {
        c0,
        phi0,
        vartheta: c1.re - l1,
        kind: SymbolKind::Affine,
        angle: None,
    })
}

/// Pure vertical translation φ₀ ≡ iτ; accepted with ϑ = 0.
pub fn make_vertical(c0: u32, tau: f64) -> Result<Symbol, SymbolError> {
    make_affine(c0, Complex64::new(0.0, tau), &[])
}

/// Taylor coefficients of Φ_α(z) = ((1-z)/(1+z))^α via the recurrence induced by
/// (1-z²)Φ' = -2αΦ, i.e. t_{k+1} = ((k-1) t_{k-1} - 2α t_k)/(k+1).
pub fn angle_taylor_coeffs(alpha: f64, k_max: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(k_max + 1);
    t.push(1.0);
    if k_max == 0 {
        return t;
    }
    t.push(-2.0 * alpha);
    for k in 1..k_max {
        let next = ((k as f64 - 1.0) * t[k - 1] - 2.0 * alpha * t[k]) / (k as f64 + 1.0);
        t.push(next);
    }
    t
}

const ANGLE_TAIL_RADIUS: f64 = 0.99;
const ANGLE_TAIL_TOL: f64 = 1e-10;
const ANGLE_TAIL_LOOKAHEAD: usize = 8000;

/// Angle-map symbol φ(s) = c₀s + ϑ + Φ_α(p^{-s}), truncated at the given Taylor
/// order. The order must leave a tail Σ_{k>K} |t_k| r^k below 1e-10 at r = 0.99.
pub fn make_angle(params: AngleParams, c0: u32) -> Result<Symbol, SymbolError> {
    if c0 < 1 {
        return Err(SymbolError::C0OutOfRange(c0));
    }
    if !(params.alpha > 0.0 && params.alpha < 1.0) {
        return Err(SymbolError::AlphaOutOfRange(params.alpha));
    }
    if params.theta_shift < 0.0 {
        return Err(SymbolError::NegativeShift(params.theta_shift));
    }
    if !crate::indices::is_prime(params.prime) {
        return Err(SymbolError::Index(crate::indices::IndexError::NotPrime(
            params.prime,
        )));
    }
    if params.taylor_order < 1 {
        return Err(SymbolError::InsufficientTaylorOrder { given: 0, required: 1 });
    }
    let k_budget = params.taylor_order + ANGLE_TAIL_LOOKAHEAD;
    let t = angle_taylor_coeffs(params.alpha, k_budget);
    // Suffix sums of |t_k| r^k decide the minimal admissible order.
    let mut suffix = vec![0.0f64; k_budget + 2];
    for k in (0..=k_budget).rev() {
        suffix[k] = suffix[k + 1] + t[k].abs() * ANGLE_TAIL_RADIUS.powi(k as i32);
    }
    let required = (0..=k_budget)
        .find(|&k| suffix[k + 1] < ANGLE_TAIL_TOL)
        .ok_or(SymbolError::TaylorTailUnreachable(k_budget))?;
    if params.taylor_order < required {
        return Err(SymbolError::InsufficientTaylorOrder {
            given: params.taylor_order,
            required,
        });
    }
    let support = PrimeSupport::single(params.prime)?;
    let bound = IndexBound::from_prime_power(params.prime, params.taylor_order as u32);
    let mut phi0 = DirichletPolynomial::zero(support, bound);
    phi0.set_exp_coeff(
        Exponents(vec![0]),
        Complex64::new(params.theta_shift + t[0], 0.0),
    );
    for (k, &tk) in t.iter().enumerate().take(params.taylor_order + 1).skip(1) {
        phi0.set_exp_coeff(Exponents(vec![k as u32]), Complex64::new(tk, 0.0));
    }
    Ok(Symbol {
        c0,
        phi0,
        vartheta: params.theta_shift,
        kind: SymbolKind::Angle,
        angle: Some(params),
    })
}

/// Number of boundary sample points used to screen custom symbols.
const CUSTOM_VALIDATION_BUDGET: usize = 10_000;

/// Custom symbol from an explicit coefficient polynomial. Membership (Re φ₀ ≥ 0 on
/// ℂ₀) is screened by sampling the distinguished boundary; the maximum principle
/// reduces the mapping property to the boundary, but sampling reports rather than
/// proves it. ϑ is the sampled minimum, clamped to [0, Re c₁].
pub fn make_custom(c0: u32, phi0: DirichletPolynomial) -> Result<Symbol, SymbolError> {
    if c0 < 1 {
        return Err(SymbolError::C0OutOfRange(c0));
    }
    let d = phi0.support().dimension();
    let per_dim = if d == 0 {
        1
    } else {
        (CUSTOM_VALIDATION_BUDGET as f64).powf(1.0 / d as f64).ceil() as usize
    };
    let min_re = boundary_min_re(&phi0, per_dim.max(2));
    if min_re < -1e-9 {
        return Err(SymbolError::MappingViolation { min_re });
    }
    let vartheta = min_re.max(0.0).min(phi0.constant_coeff().re);
    Ok(Symbol { c0, phi0, vartheta, kind: SymbolKind::Custom, angle: None })
}

fn boundary_min_re(phi0: &DirichletPolynomial, grid: usize) -> f64 {
    let d = phi0.support().dimension();
    if d == 0 {
        return phi0.constant_coeff().re;
    }
    let terms = phi0.sorted_terms();
    let mut min = f64::INFINITY;
    let mut idx = vec![0usize; d];
    loop {
        let mut re = 0.0;
        for (e, _, c) in &terms {
            let phase: f64 = e
                .0
                .iter()
                .zip(&idx)
                .map(|(&k, &i)| k as f64 * std::f64::consts::TAU * i as f64 / grid as f64)
                .sum();
            re += (c * Complex64::from_polar(1.0, phase)).re;
        }
        min = min.min(re);
        // odometer
        let mut pos = 0;
        loop {
            if pos == d {
                return min;
            }
            idx[pos] += 1;
            if idx[pos] < grid {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Generalized boundary value φ₀*(χ) = lim_{σ→0+} (φ₀)_χ(σ); exact for finite
/// polynomials: evaluate the twist at s = 0.
pub fn boundary_value(
    phi0: &DirichletPolynomial,
    chi: &Character,
) -> Result<Complex64, SeriesError> {
    Ok(twist(phi0, chi)?.evaluate(Complex64::default()))
}

#[derive(Debug, Clone, Copy)]
pub struct VarthetaEstimate {
    pub value: f64,
    pub grid_spacing: f64,
    pub grid_size: usize,
}

/// min over a uniform d-dimensional character grid of Re φ₀*(χ). Exact boundary
/// formula for angle symbols, polynomial twist otherwise.
pub fn estimate_vartheta(sym: &Symbol, grid_size: usize) -> VarthetaEstimate {
    assert!(grid_size >= 2);
    let spacing = std::f64::consts::TAU / grid_size as f64;
    if let Some(params) = sym.angle_params() {
        let c = (params.alpha * std::f64::consts::FRAC_PI_2).cos();
        let mut min = f64::INFINITY;
        for i in 0..grid_size {
            let theta = spacing * i as f64;
            let re = params.theta_shift + c * (0.5 * theta).tan().abs().powf(params.alpha);
            min = min.min(re);
        }
        return VarthetaEstimate { value: min, grid_spacing: spacing, grid_size };
    }
    let value = boundary_min_re(&sym.phi0, grid_size);
    VarthetaEstimate { value, grid_spacing: spacing, grid_size }
}

/// exp(z) - 1 with a series fallback near 0 (needed for 1 - p^{-s} at tiny |s|).
pub fn cexpm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        z * (1.0
            + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z / 720.0)))))
    } else {
        z.exp() - Complex64::new(1.0, 0.0)
    }
}

enum EvalKind {
    Chain { log_p: f64, coeffs: Vec<Complex64> },
    Generic { terms: Vec<(f64, Complex64)> },
    AngleExact { alpha: f64, theta_shift: f64, log_p: f64 },
}

/// Evaluation backend for φ and φ'. Angle symbols dispatch to the exact conformal
/// map; polynomial symbols over one prime use Horner in z = p^{-s}.
pub struct SymbolEvaluator {
    c0: f64,
    kind: EvalKind,
}

impl SymbolEvaluator {
    fn new(sym: &Symbol) -> Self {
        let c0 = sym.c0 as f64;
        if let Some(p) = sym.angle_params() {
            return Self {
                c0,
                kind: EvalKind::AngleExact {
                    alpha: p.alpha,
                    theta_shift: p.theta_shift,
                    log_p: (p.prime as f64).ln(),
                },
            };
        }
        if sym.support().dimension() <= 1 {
            let coeffs = sym.phi0.chain_coeffs().unwrap();
            let log_p = sym
                .support()
                .log_primes()
                .first()
                .copied()
                .unwrap_or(std::f64::consts::LN_2);
            return Self { c0, kind: EvalKind::Chain { log_p, coeffs } };
        }
        let terms = sym
            .phi0
            .sorted_terms()
            .into_iter()
            .map(|(_, logn, c)| (logn, c))
            .collect();
        Self { c0, kind: EvalKind::Generic { terms } }
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn phi0(&self, s: Complex64) -> Complex64 {
        match &self.kind {
            EvalKind::Chain { log_p, coeffs } => {
                let z = (-s * *log_p).exp();
                horner(coeffs, z)
            }
            EvalKind::Generic { terms } => {
                let mut acc = Complex64::default();
                for &(logn, c) in terms {
                    acc += c * (-s * logn).exp();
                }
                acc
            }
            EvalKind::AngleExact { alpha, theta_shift, log_p } => {
                Complex64::new(*theta_shift, 0.0) + phi_alpha_exact(s, *alpha, *log_p)
            }
        }
    }

    pub fn phi(&self, s: Complex64) -> Complex64 {
        self.c0 * s + self.phi0(s)
    }

    pub fn phi_derivative(&self, s: Complex64) -> Complex64 {
        let d0 = match &self.kind {
            EvalKind::Chain { log_p, coeffs } => {
                let z = (-s * *log_p).exp();
                let mut dp = Complex64::default();
                for k in (1..coeffs.len()).rev() {
                    dp = dp * z + coeffs[k] * k as f64;
                }
                -dp * z * *log_p
            }
            EvalKind::Generic { terms } => {
                let mut acc = Complex64::default();
                for &(logn, c) in terms {
                    acc -= c * logn * (-s * logn).exp();
                }
                acc
            }
            EvalKind::AngleExact { alpha, log_p, .. } => {
                // dΦ/ds = 2α (log p) z Φ / (1-z²)
                let u = s * *log_p;
                let em = cexpm1(-u); // z - 1
                let z = Complex64::new(1.0, 0.0) + em;
                let one_minus = -em;
                let one_plus = Complex64::new(2.0, 0.0) + em;
                let w = one_minus / one_plus;
                let phi = (*alpha * w.ln()).exp();
                2.0 * *alpha * *log_p * z * phi / (one_minus * one_plus)
            }
        };
        Complex64::new(self.c0, 0.0) + d0
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::default();
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Exact Φ_α(p^{-s}) on Re s > 0, stable near s = 0.
pub fn phi_alpha_exact(s: Complex64, alpha: f64, log_p: f64) -> Complex64 {
    let u = s * log_p;
    let em = cexpm1(-u); // p^{-s} - 1
    let one_minus = -em;
    let one_plus = Complex64::new(2.0, 0.0) + em;
    let w = one_minus / one_plus;
    (alpha * w.ln()).exp()
}

/// Exact boundary value Re Φ_α on the unit circle: cos(απ/2)|tan(θ/2)|^α.
pub fn re_phi_alpha_boundary(theta: f64, alpha: f64) -> f64 {
    let c = (alpha * std::f64::consts::FRAC_PI_2).cos();
    let t = (0.5 * theta).tan().abs();
    c * t.powf(alpha)
}

/// Numeric sector probe for angle symbols: the sup of |Im φ(it)|/Re φ(it) over the
/// vertical boundary of the fundamental strip, plus the inf of the shifted real
/// part along the horizontal edges. Reports β₀ = (2/π) arctan(bound).
#[derive(Debug, Clone, Copy)]
pub struct SectorBound {
    pub ratio_bound: f64,
    pub beta0: f64,
    pub edge_minimum: f64,
}

pub fn angle_sector_bound(sym: &Symbol, samples: usize) -> Option<SectorBound> {
    let params = *sym.angle_params()?;
    let ev = sym.evaluator();
    let log_p = (params.prime as f64).ln();
    let period = std::f64::consts::TAU / log_p;
    let half = 0.5 * period;
    let mut ratio = 0.0f64;
    for i in 0..samples {
        let t = -half + period * (i as f64 + 0.5) / samples as f64;
        if t.abs() < 1e-12 {
            continue;
        }
        let v = ev.phi(Complex64::new(0.0, t));
        if v.re > 0.0 {
            ratio = ratio.max(v.im.abs() / v.re);
        }
    }
    let mut edge_min = f64::INFINITY;
    let shift = sym.c0 as f64 * half;
    for i in 0..samples {
        let sigma = 1e-4 * (1e5f64).powf(i as f64 / (samples.max(2) - 1) as f64);
        let v = ev.phi(Complex64::new(sigma, half - 1e-13));
        edge_min = edge_min.min(v.re);
        let _ = shift;
    }
    Some(SectorBound {
        ratio_bound: ratio,
        beta0: (ratio.atan()) * 2.0 / std::f64::consts::PI,
        edge_minimum: edge_min,
    })
}
