//! Scalar special functions: log Gamma, digamma, polygamma via Hurwitz zeta
//! with Euler-Maclaurin tails, exact Bernoulli numbers, and Taylor
//! coefficients of 1/Gamma around rational points.
//!
//! Everything here is f64. The Euler-Maclaurin shifts are chosen so the
//! truncation error sits below 1e-15 relative; requests for more digits than
//! the evaluator can certify are rejected upstream.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest digit count the f64 evaluators certify.
pub const MAX_DIGITS: u32 = 14;

pub fn check_digits(digits: u32) -> Result<()> {
    if digits > MAX_DIGITS {
        Err(Error::PrecisionUnattainable { digits })
    } else {
        Ok(())
    }
}

/// Exact Bernoulli numbers B_0..B_n with the B_1 = -1/2 convention.
pub fn bernoulli(n: usize) -> Vec<BigRational> {
    // B_m = -sum_{k<m} C(m+1, k) B_k / (m+1)
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(BigRational::one());
            continue;
        }
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one(); // C(m+1, 0)
        for (k, bk) in b.iter().enumerate().take(m) {
            if !bk.is_zero() {
                acc += BigRational::from_integer(binom.clone()) * bk;
            }
            // C(m+1, k+1) = C(m+1, k) * (m+1-k) / (k+1)
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

const EM_SHIFT: f64 = 18.0;
const EM_TERMS: usize = 10;

fn bern_f64() -> &'static [f64] {
    use std::sync::OnceLock;
    static CELL: OnceLock<Vec<f64>> = OnceLock::new();
    CELL.get_or_init(|| {
        bernoulli(2 * EM_TERMS + 2)
            .iter()
            .map(|x| crate::rational::to_f64(x))
            .collect()
    })
}

/// log Gamma(a) for a > 0, Stirling with Euler-Maclaurin correction after an
/// upward recurrence shift.
pub fn log_gamma(a: f64) -> f64 {
    assert!(a > 0.0, "log_gamma needs a > 0, got {a}");
    let mut shift = 0.0f64;
    let mut x = a;
    while x < EM_SHIFT {
        shift += x.ln();
        x += 1.0;
    }
    let b = bern_f64();
    let mut s = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln();
    let x2 = x * x;
    let mut xp = x;
    for k in 1..=EM_TERMS {
        s += b[2 * k] / ((2 * k * (2 * k - 1)) as f64 * xp);
        xp *= x2;
    }
    s - shift
}

pub fn gamma(a: f64) -> f64 {
    if a > 0.0 {
        log_gamma(a).exp()
    } else {
        // reflection: Gamma(a) = pi / (sin(pi a) Gamma(1 - a))
        let s = (std::f64::consts::PI * a).sin();
        std::f64::consts::PI / (s * gamma(1.0 - a))
    }
}

/// digamma psi(a) for a > 0.
pub fn digamma(a: f64) -> f64 {
    assert!(a > 0.0);
    let mut x = a;
    let mut corr = 0.0f64;
    while x < EM_SHIFT {
        corr -= 1.0 / x;
        x += 1.0;
    }
    let b = bern_f64();
    let mut s = x.ln() - 0.5 / x;
    let x2 = x * x;
    let mut xp = x2;
    for k in 1..=EM_TERMS {
        s -= b[2 * k] / (2.0 * k as f64 * xp);
        xp *= x2;
    }
    s + corr
}

/// Hurwitz zeta(s, a) for real s > 1, a > 0, by Euler-Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0);
    let mut sum = 0.0f64;
    let mut x = a;
    while x < EM_SHIFT {
        sum += x.powf(-s);
        x += 1.0;
    }
    // Tail from x: integral + boundary + Bernoulli corrections.
    sum += x.powf(1.0 - s) / (s - 1.0);
    sum += 0.5 * x.powf(-s);
    let b = bern_f64();
    // term_k = B_{2k}/(2k)! * (s)(s+1)...(s+2k-2) * x^{-s-2k+1}
    let mut rising = s;
    let mut fact: f64 = 2.0;
    let mut xp = x.powf(-s - 1.0);
    for k in 1..=EM_TERMS {
        sum += b[2 * k] / fact * rising * xp;
        rising *= (s + 2.0 * k as f64 - 1.0) * (s + 2.0 * k as f64);
        fact *= (2.0 * k as f64 + 1.0) * (2.0 * k as f64 + 2.0);
        xp /= x * x;
    }
    sum
}

/// polygamma psi^{(k)}(a) for k >= 0, a > 0.
pub fn polygamma(k: usize, a: f64) -> f64 {
    if k == 0 {
        return digamma(a);
    }
    // psi^{(k)}(a) = (-1)^{k+1} k! zeta(k+1, a)
    let mut fact = 1.0f64;
    for j in 2..=k {
        fact *= j as f64;
    }
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * fact * hurwitz_zeta(k as f64 + 1.0, a)
}

/// Taylor coefficients c_0..c_order of log Gamma(a + u) around u = 0, a > 0:
/// c_0 = log Gamma(a), c_k = psi^{(k-1)}(a)/k!.
pub fn log_gamma_series(a: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    out.push(log_gamma(a));
    let mut fact = 1.0f64;
    for k in 1..=order {
        fact *= k as f64;
        out.push(polygamma(k - 1, a) / fact);
    }
    out
}

/// Taylor coefficients of Gamma(a + u) around u = 0 for a > 0.
pub fn gamma_series(a: f64, order: usize) -> Vec<f64> {
    let lg = log_gamma_series(a, order);
    exp_series(&lg, order)
}

/// Taylor coefficients of 1/Gamma(a + u) around u = 0 for any real a;
/// zeros at non-positive integers are produced by the recurrence
/// 1/Gamma(a + u) = [prod_{j=0}^{k-1} (a + j + u)] / Gamma(a + k + u).
pub fn recip_gamma_series(a: f64, order: usize) -> Vec<f64> {
    if a >= 0.5 {
        let mut lg = log_gamma_series(a, order);
        for c in lg.iter_mut() {
            *c = -*c;
        }
        return exp_series(&lg, order);
    }
    let k = (1.0 - a).ceil() as usize; // a + k >= 1
    let mut out = recip_gamma_series(a + k as f64, order);
    for j in 0..k {
        // multiply by (a + j + u)
        let c = a + j as f64;
        let mut next = vec![0.0; order + 1];
        for (i, v) in out.iter().enumerate() {
            next[i] += c * v;
            if i + 1 <= order {
                next[i + 1] += v;
            }
        }
        out = next;
    }
    out
}

/// exp of a power series (truncated at `order`), given coefficients of the
/// exponent with exponent[0] permitted nonzero.
pub fn exp_series(exponent: &[f64], order: usize) -> Vec<f64> {
    let scale = exponent[0].exp();
    // exp(f) with f(0)=0: g' = f' g
    let mut g = vec![0.0f64; order + 1];
    g[0] = 1.0;
    for n in 1..=order {
        let mut acc = 0.0;
        for k in 1..=n {
            if k < exponent.len() {
                acc += k as f64 * exponent[k] * g[n - k];
            }
        }
        g[n] = acc / n as f64;
    }
    for v in g.iter_mut() {
        *v *= scale;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn bernoulli_small() {
        let b = bernoulli(8);
        assert_eq!(b[0], rat(1, 1));
        assert_eq!(b[1], rat(-1, 2));
        assert_eq!(b[2], rat(1, 6));
        assert_eq!(b[3], rat(0, 1));
        assert_eq!(b[4], rat(-1, 30));
        assert_eq!(b[6], rat(1, 42));
        assert_eq!(b[8], rat(-1, 30));
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(1.0) - 1.0).abs() < 1e-13);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        // Gamma(1/3) = 2.678938534707747633...
        assert!((gamma(1.0 / 3.0) - 2.678_938_534_707_747_6).abs() < 1e-12);
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-13);
        // psi(1/2) = -gamma - 2 ln 2
        assert!((digamma(0.5) + EULER_GAMMA + 2.0 * 2.0f64.ln()).abs() < 1e-13);
        // psi(2) = 1 - gamma
        assert!((digamma(2.0) - (1.0 - EULER_GAMMA)).abs() < 1e-13);
    }

    #[test]
    fn hurwitz_zeta_values() {
        // zeta(2, 1) = pi^2/6
        let z = hurwitz_zeta(2.0, 1.0);
        assert!((z - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        // zeta(2, 1/2) = pi^2/2
        let z = hurwitz_zeta(2.0, 0.5);
        assert!((z - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
        // psi'(1) = zeta(2) via polygamma
        assert!((polygamma(1, 1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
    }

    #[test]
    fn brute_force_zeta_oracle() {
        // Direct summation with a crude tail bound as an independent check.
        for (s, a) in [(2.0, 0.25), (3.0, 1.5), (4.0, 0.75)] {
            let mut brute = 0.0f64;
            let n = 4_000_000u64;
            for j in 0..n {
                brute += (a + j as f64).powf(-s);
            }
            // integral tail estimate
            brute += (a + n as f64).powf(1.0 - s) / (s - 1.0);
            assert!(
                (hurwitz_zeta(s, a) - brute).abs() < 1e-10,
                "zeta({s},{a}) mismatch"
            );
        }
    }

    #[test]
    fn recip_gamma_at_one() {
        // 1/Gamma(1+u) = 1 + gamma u + (gamma^2/2 - pi^2/12) u^2 + ...
        let c = recip_gamma_series(1.0, 2);
        assert!((c[0] - 1.0).abs() < 1e-13);
        assert!((c[1] - EULER_GAMMA).abs() < 1e-13);
        let expected2 = EULER_GAMMA * EULER_GAMMA / 2.0 - std::f64::consts::PI.powi(2) / 12.0;
        assert!((c[2] - expected2).abs() < 1e-13);
    }

    #[test]
    fn recip_gamma_at_nonpositive_integers() {
        // 1/Gamma(u): coefficient of u^0 is 0, of u^1 is 1.
        let c = recip_gamma_series(0.0, 3);
        assert!(c[0].abs() < 1e-13);
        assert!((c[1] - 1.0).abs() < 1e-13);
        // 1/Gamma(-1 + u) = -u + ... : c0 = 0, c1 = -1
        let c = recip_gamma_series(-1.0, 3);
        assert!(c[0].abs() < 1e-13);
        assert!((c[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_series_matches_finite_differences() {
        // Finite-difference oracle for d/du Gamma(3/2 + u) at u = 0.
        let h = 1e-5;
        let fd = (gamma(1.5 + h) - gamma(1.5 - h)) / (2.0 * h);
        let c = gamma_series(1.5, 1);
        assert!((c[1] - fd).abs() < 1e-8);
    }
}
