//! Special functions and compensated summation.
//!
//! `ln_gamma` and `digamma` come from `statrs`; the log-Gamma ratio and the
//! trigamma function are evaluated here because the fixation-line rates need
//! `Γ(x + a) / Γ(x)` for `x` up to ~1e7 without losing relative precision.

pub use statrs::function::gamma::{digamma, gamma, ln_gamma};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const STIRLING_SHIFT: f64 = 30.0;

fn stirling_tail(z: f64) -> f64 {
    let z2 = z * z;
    (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z
}

/// `ln Γ(x + a) − ln Γ(x)` for `x > 0`, `x + a > 0`.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    debug_assert!(x > 0.0 && x + a > 0.0);
    if a == 0.0 {
        return 0.0;
    }
    if a.abs() > 64.0 {
        return ln_gamma(x + a) - ln_gamma(x);
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < STIRLING_SHIFT || x + a < STIRLING_SHIFT {
        // Γ(x + a)/Γ(x) = Γ(x + 1 + a)/Γ(x + 1) · x/(x + a)
        acc -= (a / x).ln_1p();
        x += 1.0;
    }
    let y = x + a;
    acc + (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a + stirling_tail(y) - stirling_tail(x)
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    if a >= b {
        ln_gamma(b) - ln_gamma_ratio(a, b)
    } else {
        ln_gamma(a) - ln_gamma_ratio(b, a)
    }
}

/// Trigamma function `ψ₁(x)` for `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let z = 1.0 / x;
    let z2 = z * z;
    // 1/x + 1/(2x²) + Σ B_{2k}/x^{2k+1}
    acc + z
        + 0.5 * z2
        + z * z2 * (1.0 / 6.0 - z2 * (1.0 / 30.0 - z2 * (1.0 / 42.0 - z2 * (1.0 / 30.0 - z2 * 5.0 / 66.0))))
}

/// Binomial coefficient as a float; zero outside `0 ≤ k ≤ n`.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if k <= 60 {
        let mut acc = 1.0;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc
    } else {
        (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)).exp()
    }
}

/// `ln(1 + z) / z`, continuous at zero.
pub fn ln_1p_over(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 - z / 2.0 + z * z / 3.0 - z * z * z / 4.0
    } else {
        z.ln_1p() / z
    }
}

/// Neumaier-compensated accumulator that also tracks `Σ|term|`, so callers
/// can report the condition number of an alternating sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
    magnitude: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.compensation += (self.sum - t) + term;
        } else {
            self.compensation += (term - t) + self.sum;
        }
        self.sum = t;
        self.magnitude += term.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// `Σ|term| / |Σ term|`; infinite when the sum cancels to zero exactly.
    pub fn condition(&self) -> f64 {
        let v = self.value().abs();
        if self.magnitude == 0.0 {
            1.0
        } else if v == 0.0 {
            f64::INFINITY
        } else {
            self.magnitude / v
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for t in iter {
            s.add(t);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_ratio_matches_direct_difference() {
        for &x in &[0.3, 1.0, 2.5, 7.0, 29.0, 31.0, 150.0] {
            for &a in &[0.2, 0.5, 1.5, 1.9, 3.0] {
                let direct = ln_gamma(x + a) - ln_gamma(x);
                assert_relative_eq!(ln_gamma_ratio(x, a), direct, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gamma_ratio_large_argument() {
        // Γ(n + 1)/Γ(n) = n exactly.
        for &n in &[1e3, 1e6, 1e9] {
            assert_relative_eq!(ln_gamma_ratio(n, 1.0), f64::ln(n), max_relative = 1e-14);
        }
        // Γ(n + 1/2)/Γ(n) = √n (1 − 1/(8n) + 1/(128n²) + ...)
        let n: f64 = 1e6;
        let expected = n.sqrt() * (1.0 - 1.0 / (8.0 * n) + 1.0 / (128.0 * n * n));
        assert_relative_eq!(ln_gamma_ratio(n, 0.5).exp(), expected, max_relative = 1e-13);
    }

    #[test]
    fn trigamma_known_values() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert_relative_eq!(trigamma(1.0), pi2_6, max_relative = 1e-13);
        assert_relative_eq!(trigamma(2.0), pi2_6 - 1.0, max_relative = 1e-13);
        assert_relative_eq!(trigamma(0.5), 3.0 * pi2_6, max_relative = 1e-13);
        let x: f64 = 1e4;
        assert_relative_eq!(trigamma(x), 1.0 / x + 0.5 / (x * x) + 1.0 / (6.0 * x.powi(3)), max_relative = 1e-14);
    }

    #[test]
    fn binomial_small_and_large() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(1, 2), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
        assert_relative_eq!(binomial(200, 100), 9.054851465610328e58, max_relative = 1e-10);
    }

    #[test]
    fn compensated_sum_condition() {
        let s: CompensatedSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.value(), 1.0);
        assert!(s.condition() > 1e15);
    }
}
