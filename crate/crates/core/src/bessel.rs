//! Exponentially scaled modified Bessel function of the first kind, order zero.

/// i0e(x) = e^{-x} I₀(x) for x ≥ 0.
///
/// Power series below the crossover (all terms positive, no cancellation), Hankel
/// asymptotic expansion above it; the asymptotic tail terms at x > 35 bottom out
/// far below 1e-16 relative.
pub fn i0e(x: f64) -> f64 {
    assert!(x >= 0.0, "i0e requires x >= 0");
    if x <= 35.0 {
        let z = 0.25 * x * x;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut k = 0u32;
        while term > 1e-19 * sum {
            k += 1;
            term *= z / ((k as f64) * (k as f64));
            sum += term;
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut k = 0u32;
        loop {
            k += 1;
            let next = term * ((2 * k - 1) as f64).powi(2) / (8.0 * k as f64 * x);
            if next >= term || next < 1e-19 * sum {
                if next < term {
                    sum += next;
                }
                break;
            }
            term = next;
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// I₀(x) without scaling; overflows for large x, test use only.
pub fn i0(x: f64) -> f64 {
    i0e(x) * x.exp()
}
