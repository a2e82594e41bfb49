//! Closed-form expressions for fixation, explosion and stationary times.
//!
//! The fixation-time formulas are alternating sums over subsets `J` of the
//! `d + 1` types,
//! `Σ_{ℓ=1}^{k} (−1)^{k−ℓ} C(d−ℓ, k−ℓ) Σ_{|J|=ℓ} f(S_J)` with `S_J = Σ_{i∈J} x(i)`.
//! They are accumulated with compensated summation and report
//! `Σ|terms| / |Σ terms|` as a condition number. `1 − S_J` is always
//! computed as the sum over the complement of `J`. Enumeration is limited to
//! `d ≤ 25`.
//!
//! For the Beta integrals the substitution `u = (1 − y)^{α−1}` turns the
//! `(1 − y)^{α−2}` endpoint behaviour into a bounded integrand on `(0, 1)`.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::lambda::SimplexPoint;
use crate::quadrature::{integrate, QuadratureConfig};
use crate::special::{binomial, digamma, ln_1p_over, trigamma, CompensatedSum, EULER_GAMMA};

/// Largest `d` accepted by the subset sums.
pub const MAX_SUBSET_DIMENSION: usize = 25;

/// Truncation settings for infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub tail_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { tail_tol: 1e-10, max_terms: 100_000 }
    }
}

impl SeriesConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0 && self.max_terms > 0) {
            return Err(Error::Invalid(format!("series settings must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// A value with an absolute error estimate and the condition number of the
/// final summation (1 when no cancellation is possible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub abs_error: f64,
    pub condition: f64,
}

impl Evaluation {
    fn exact(value: f64) -> Self {
        Self { value, abs_error: 0.0, condition: 1.0 }
    }
}

/// One subset term: inclusion–exclusion coefficient, `S_J` and `1 − S_J`.
#[derive(Debug, Clone, Copy)]
struct SubsetTerm {
    coef: f64,
    s: f64,
    rest: f64,
}

fn check_k(x: &SimplexPoint, k: usize) -> Result<()> {
    if k == 0 || k > x.d() + 1 {
        return Err(domain!("k must lie in [1, {}], got {k}", x.d() + 1));
    }
    if x.d() > MAX_SUBSET_DIMENSION {
        return Err(domain!("subset enumeration is limited to d <= {MAX_SUBSET_DIMENSION}, got {}", x.d()));
    }
    Ok(())
}

fn subset_terms(x: &SimplexPoint, k: usize) -> Vec<SubsetTerm> {
    let full = x.full();
    let d = x.d();
    let types = d + 1;
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << types) {
        let l = mask.count_ones() as usize;
        if l > k || l > d {
            continue;
        }
        let mut s = CompensatedSum::new();
        let mut rest = CompensatedSum::new();
        for (i, &xi) in full.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.add(xi);
            } else {
                rest.add(xi);
            }
        }
        let sign = if (k - l) % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * binomial((d - l) as u64, (k - l) as u64);
        out.push(SubsetTerm { coef, s: s.value().min(1.0), rest: rest.value().min(1.0) });
    }
    out
}

fn guard_probability(sum: &CompensatedSum, what: &str) -> Result<Evaluation> {
    let v = sum.value();
    let err = 4.0 * f64::EPSILON * sum.magnitude();
    if v < -1e-9 || v > 1.0 + 1e-9 {
        return Err(Error::Numeric(format!(
            "{what}: cancellation produced {v:.3e} (condition {:.3e})",
            sum.condition()
        )));
    }
    Ok(Evaluation { value: v.clamp(0.0, 1.0), abs_error: err, condition: sum.condition() })
}

/// `P(V^x_k = p)` by inclusion–exclusion.
pub fn coupon_pmf(x: &SimplexPoint, k: usize, p: u64) -> Result<Evaluation> {
    check_k(x, k)?;
    if p < 2 {
        return Err(domain!("p must be at least 2, got {p}"));
    }
    if k == x.d() + 1 {
        return Ok(Evaluation::exact(0.0));
    }
    let mut sum = CompensatedSum::new();
    for t in subset_terms(x, k) {
        sum.add(t.coef * t.s.powf((p - 1) as f64) * t.rest);
    }
    guard_probability(&sum, "coupon pmf")
}

/// `P(V^x_k > p)`, used to bound truncated sums over `p`.
fn coupon_tail_bound(x: &SimplexPoint, k: usize, p: u64) -> f64 {
    // Each subset term of the pmf is at most S^{p−1}(1−S) ≤ S_max^{p−1}.
    let terms = subset_terms(x, k);
    let smax = terms.iter().filter(|t| t.rest > 0.0).map(|t| t.s).fold(0.0, f64::max);
    let weight: f64 = terms.iter().map(|t| t.coef.abs()).sum();
    if smax >= 1.0 {
        return f64::INFINITY;
    }
    weight * smax.powf(p as f64) / (1.0 - smax)
}

/// `P(T_lost,i_{d+1} < … < T_lost,i_1) = Π_k x(i_k) / Σ_{l ≥ k} x(i_l)`.
/// `order = (i_1, …, i_{d+1})` lists types from the last survivor to the first loss.
pub fn disappearance_order_prob(x: &SimplexPoint, order: &[usize]) -> Result<f64> {
    let types = x.d() + 1;
    let mut seen = vec![false; types];
    if order.len() != types || order.iter().any(|&i| i == 0 || i > types || std::mem::replace(&mut seen[i - 1], true)) {
        return Err(domain!("order must be a permutation of 1..={types}, got {order:?}"));
    }
    let full = x.full();
    let mut p = 1.0;
    for k in 0..types {
        let denom: f64 = order[k..].iter().map(|&i| full[i - 1]).sum();
        if denom <= 0.0 {
            return Ok(0.0);
        }
        p *= full[order[k] - 1] / denom;
    }
    Ok(p)
}

/// Probability that type `eta` is the first to disappear: the sum of
/// [`disappearance_order_prob`] over orders ending in `eta`.
pub fn first_to_disappear_prob(x: &SimplexPoint, eta: usize) -> Result<f64> {
    let types = x.d() + 1;
    if eta == 0 || eta > types {
        return Err(domain!("type must lie in [1, {types}], got {eta}"));
    }
    if types > 10 {
        return Err(domain!("enumeration over orders is limited to at most 10 types"));
    }
    let mut rest: Vec<usize> = (1..=types).filter(|&i| i != eta).collect();
    let mut total = CompensatedSum::new();
    permutations(&mut rest, 0, &mut |perm| {
        let mut order = perm.to_vec();
        order.push(eta);
        total.add(disappearance_order_prob(x, &order).expect("valid permutation"));
    });
    Ok(total.value())
}

/// All permutations of `1..=n`.
pub fn all_orders(n: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (1..=n).collect();
    let mut out = Vec::new();
    permutations(&mut items, 0, &mut |p| out.push(p.to_vec()));
    out
}

fn permutations(items: &mut [usize], start: usize, f: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        f(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permutations(items, start + 1, f);
        items.swap(start, i);
    }
}

/// `E[T^x_fix,k]` for `Λ = c·δ₀`:
/// `−(2/c) Σ (−1)^{k−ℓ} C(d−ℓ, k−ℓ) Σ_J (1 − S_J) ln(1 − S_J)`.
pub fn mean_fixation_kingman(x: &SimplexPoint, k: usize, c: f64) -> Result<Evaluation> {
    check_k(x, k)?;
    if !(c > 0.0) {
        return Err(domain!("Kingman mass must be positive, got {c}"));
    }
    if k == x.d() + 1 {
        return Ok(Evaluation::exact(0.0));
    }
    let mut sum = CompensatedSum::new();
    for t in subset_terms(x, k) {
        if t.rest > 0.0 {
            sum.add(t.coef * t.rest * t.rest.ln());
        }
    }
    let scale = 2.0 / c;
    let value = (-scale * sum.value()).max(0.0);
    Ok(Evaluation { value, abs_error: scale * 4.0 * f64::EPSILON * sum.magnitude(), condition: sum.condition() })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(domain!("alpha must lie in (1, 2), got {alpha}"));
    }
    Ok(())
}

/// `1 − u^β` for `u ∈ (0, 1)`.
fn one_minus_pow(u: f64, beta: f64) -> f64 {
    -(beta * u.ln()).exp_m1()
}

/// `E[I^k(∞)] = α(α−1) ∫₀¹ y^k (1−y)^{−1} / ((1−y)^{1−α} − 1) dy` for the
/// Beta(2−α, α) measure, evaluated as `α ∫₀¹ (1 − u^β)^k / (1 − u) du`, `β = 1/(α−1)`.
pub fn mean_explosion_beta(k: u64, alpha: f64, cfg: &QuadratureConfig) -> Result<Evaluation> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(domain!("F^0 never leaves level 0 without mutation; k must be at least 1"));
    }
    let beta = 1.0 / (alpha - 1.0);
    let r = integrate(|u| one_minus_pow(u, beta).powi(k as i32) / (1.0 - u), 0.0, 1.0, cfg)?;
    Ok(Evaluation { value: alpha * r.value, abs_error: alpha * r.abs_error, condition: 1.0 })
}

/// `E[T^x_fix,k]` for the Beta(2−α, α) measure from the closed form
/// `α(α−1) Σ (−1)^{k−ℓ} C(d−ℓ, k−ℓ) Σ_J (1 − S) ∫₀¹ y S (1−y)^{−1} / ((1 − yS)((1−y)^{1−α} − 1)) dy`.
pub fn mean_fixation_beta(x: &SimplexPoint, k: usize, alpha: f64, cfg: &QuadratureConfig) -> Result<Evaluation> {
    check_k(x, k)?;
    check_alpha(alpha)?;
    if k == x.d() + 1 {
        return Ok(Evaluation::exact(0.0));
    }
    let beta = 1.0 / (alpha - 1.0);
    let mut sum = CompensatedSum::new();
    let mut err = 0.0;
    for t in subset_terms(x, k) {
        if t.rest <= 0.0 || t.s <= 0.0 {
            continue;
        }
        let (s, rest) = (t.s, t.rest);
        // In u: α ∫ S (1 − u^β) / ((1 − u)(1 − (1 − u^β) S)) du, with
        // 1 − (1 − u^β)S = (1 − S) + S u^β.
        let r = integrate(
            |u| {
                let y = one_minus_pow(u, beta);
                s * y / ((1.0 - u) * (rest + s * (beta * u.ln()).exp()))
            },
            0.0,
            1.0,
            cfg,
        )?;
        sum.add(t.coef * rest * alpha * r.value);
        err += (t.coef * rest * alpha).abs() * r.abs_error;
    }
    let value = sum.value().max(0.0);
    Ok(Evaluation { value, abs_error: err + 4.0 * f64::EPSILON * sum.magnitude(), condition: sum.condition() })
}

/// The mixture `Σ_{p ≥ 2} E[I^{p−1}(∞)] P(V^x_k = p)` for the Beta(2−α, α) measure.
pub fn mean_fixation_beta_mixture(
    x: &SimplexPoint,
    k: usize,
    alpha: f64,
    quad: &QuadratureConfig,
    series: &SeriesConfig,
) -> Result<Evaluation> {
    check_k(x, k)?;
    check_alpha(alpha)?;
    series.validate()?;
    if k == x.d() + 1 {
        return Ok(Evaluation::exact(0.0));
    }
    let first = mean_explosion_beta(1, alpha, quad)?.value;
    let mut sum = CompensatedSum::new();
    let mut err = 0.0;
    for p in 2..(series.max_terms as u64 + 2) {
        let pmf = coupon_pmf(x, k, p)?.value;
        if pmf > 0.0 {
            let e = mean_explosion_beta(p - 1, alpha, quad)?;
            sum.add(pmf * e.value);
            err += pmf * e.abs_error;
        }
        let tail = first * coupon_tail_bound(x, k, p);
        if tail < series.tail_tol {
            return Ok(Evaluation { value: sum.value(), abs_error: err + tail, condition: sum.condition() });
        }
    }
    Err(Error::Numeric(format!("mixture series did not reach tail tolerance within {} terms", series.max_terms)))
}

/// `φ⁰(s) = (α−1) s / ((1−s) − (1−s)^α)`, with `φ⁰(0) = 1`.
pub fn phi0(s: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..1.0).contains(&s) {
        return Err(domain!("phi0 needs s in [0, 1), got {s}"));
    }
    Ok(phi0_unchecked(s, alpha))
}

fn phi0_unchecked(s: f64, alpha: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    // (1−s) − (1−s)^α = −(1−s)·expm1((α−1) ln(1−s))
    (alpha - 1.0) * s / (-(1.0 - s) * ((alpha - 1.0) * (-s).ln_1p()).exp_m1())
}

/// `φ^j(s) = s^j α ∫₀¹ x^{j−2} (1−x)^{α−1} φ⁰(xs) dx` for `j ≥ 2` and
/// `s ∈ (0, 1]`; `φ⁰` for `j = 0`. The integral diverges for `j = 1`.
pub fn phi_generating(j: u64, s: f64, alpha: f64, cfg: &QuadratureConfig) -> Result<Evaluation> {
    check_alpha(alpha)?;
    if j == 0 {
        return Ok(Evaluation::exact(phi0(s, alpha)?));
    }
    if j == 1 {
        return Err(domain!("the integral defining phi^1 diverges at x = 0"));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(domain!("phi^j needs s in (0, 1], got {s}"));
    }
    let beta = 1.0 / (alpha - 1.0);
    // x = 1 − u^β, dx = β u^{β−1} du, (1 − x)^{α−1} = u.
    let r = integrate(
        |u| {
            let ub = (beta * u.ln()).exp();
            let x = one_minus_pow(u, beta);
            let xs = x * s;
            let w = (1.0 - s) + s * ub;
            let core = if xs == 0.0 {
                ub
            } else {
                (alpha - 1.0) * xs * ub / (w * -((alpha - 1.0) * w.ln()).exp_m1())
            };
            beta * x.powi(j as i32 - 2) * core
        },
        0.0,
        1.0,
        cfg,
    )?;
    let pre = alpha * s.powi(j as i32);
    Ok(Evaluation { value: pre * r.value, abs_error: pre * r.abs_error, condition: 1.0 })
}

const CHARFUNC_PRODUCT_TERMS: u64 = 10_000;

/// `Π_{r ≥ 1} (1 − 2it/(r(r+1)))^{−1}` in log space, with the analytic tail
/// `i·2t/(R+1) − 2t² (ψ₁(R+1) + ψ₁(R+2) − 2/(R+1))` beyond `R`.
fn log_kingman_product(t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for r in (1..=CHARFUNC_PRODUCT_TERMS).rev() {
        let z = 2.0 * t / (r as f64 * (r as f64 + 1.0));
        acc -= Complex64::new(1.0, -z).ln();
    }
    let rr = CHARFUNC_PRODUCT_TERMS as f64;
    let linear = 2.0 * t / (rr + 1.0);
    let quadratic = 4.0 * t * t * (trigamma(rr + 1.0) + trigamma(rr + 2.0) - 2.0 / (rr + 1.0));
    acc + Complex64::new(-0.5 * quadratic, linear)
}

/// `E[exp(i t T^x_fix,k)]` for `Λ = δ₀`:
/// `Σ (−1)^{k−ℓ} C(d−ℓ, k−ℓ) Σ_J (1 − S) Σ_{p≥1} S^p Π_{r≥p} (1 − 2it/((r+1)r))^{−1}`.
/// For `Λ = c·δ₀` evaluate at `t / c`.
pub fn fixation_charfunc_kingman(x: &SimplexPoint, k: usize, t: f64, series: &SeriesConfig) -> Result<Complex64> {
    check_k(x, k)?;
    series.validate()?;
    if k == x.d() + 1 || t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let terms: Vec<SubsetTerm> = subset_terms(x, k).into_iter().filter(|t| t.rest > 0.0 && t.s > 0.0).collect();
    let smax = terms.iter().map(|t| t.s).fold(0.0, f64::max);
    // Products P_p = Π_{r ≥ p}(…)^{−1} satisfy |P_p| ≤ 1, so Σ_{p > P} S^p (1−S) ≤ S^{P+1}.
    let mut products = Vec::new();
    let mut pp = log_kingman_product(t).exp();
    let mut p = 1u64;
    loop {
        products.push(pp);
        if smax.powf((p + 1) as f64) < series.tail_tol {
            break;
        }
        if p as usize >= series.max_terms {
            return Err(Error::Numeric(format!("characteristic-function series exceeded {} terms", series.max_terms)));
        }
        pp *= Complex64::new(1.0, -2.0 * t / (p as f64 * (p as f64 + 1.0)));
        p += 1;
    }
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for term in &terms {
        let mut inner = Complex64::new(0.0, 0.0);
        let mut sp = 1.0;
        for prod in &products {
            sp *= term.s;
            inner += prod * sp;
        }
        let v = inner * (term.coef * term.rest);
        re.add(v.re);
        im.add(v.im);
    }
    // The p = 0 term would correspond to V = 1, which has probability zero;
    // the subset sums above already carry the normalisation.
    Ok(Complex64::new(re.value(), im.value()))
}

/// `E[I⁰(∞)] = Σ_{j≥0} 1/((j+1)(θ + c j/2))` for `Λ = c·δ₀`, from the series
/// with an Euler–Maclaurin tail. Valid across `θ = c/2`.
pub fn stationary_time_mean(c: f64, theta: f64) -> Result<Evaluation> {
    if !(c > 0.0) {
        return Err(domain!("Kingman mass must be positive, got {c}"));
    }
    if !(theta > 0.0) {
        return Err(domain!("theta must be positive for a stationary time, got {theta}"));
    }
    const J: u64 = 10_000;
    let term = |j: f64| 1.0 / ((j + 1.0) * (theta + c * j / 2.0));
    let mut sum = 0.0;
    for j in (0..J).rev() {
        sum += term(j as f64);
    }
    // Σ_{j≥J} f(j) = ∫_J^∞ f + f(J)/2 − f'(J)/12 + O(J^{−5}), f(x) = (2/c)/((x+1)(x+a)).
    let a = 2.0 * theta / c;
    let jf = J as f64;
    let integral = 2.0 / c / (jf + 1.0) * ln_1p_over((a - 1.0) / (jf + 1.0));
    let derivative = -2.0 / c * (2.0 * jf + 1.0 + a) / ((jf + 1.0).powi(2) * (jf + a).powi(2));
    let value = sum + integral + term(jf) / 2.0 - derivative / 12.0;
    Ok(Evaluation { value, abs_error: 1e-15 * value + 2.0 / (c * jf.powi(5)), condition: 1.0 })
}

/// `(ψ(2θ/c) + γ) / (θ − c/2)`; undefined at `θ = c/2`.
pub fn stationary_time_mean_digamma(c: f64, theta: f64) -> Result<f64> {
    if !(c > 0.0 && theta > 0.0) {
        return Err(domain!("need c > 0 and theta > 0, got c = {c}, theta = {theta}"));
    }
    if (theta - c / 2.0).abs() <= 1e-12 * c {
        return Err(domain!("the digamma form is 0/0 at theta = c/2"));
    }
    Ok((digamma(2.0 * theta / c) + EULER_GAMMA) / (theta - c / 2.0))
}

/// Mean fixation time over the simplex lattice `x1 + x2 ≤ 1` with step `1/m`, `d = 2`.
pub fn fixation_grid(m: usize, k: usize, mean: impl Fn(&SimplexPoint, usize) -> Result<f64>) -> Result<Vec<(f64, f64, f64)>> {
    if m == 0 {
        return Err(domain!("grid resolution must be positive"));
    }
    let mut rows = Vec::new();
    for i in 0..=m {
        for j in 0..=(m - i) {
            let x1 = i as f64 / m as f64;
            let x2 = j as f64 / m as f64;
            let x = SimplexPoint::new(vec![x1, x2.min(1.0 - x1)])?;
            rows.push((x1, x2, mean(&x, k)?));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp(x: &[f64]) -> SimplexPoint {
        SimplexPoint::new(x.to_vec()).unwrap()
    }

    #[test]
    fn coupon_examples() {
        let x = sp(&[0.5]);
        assert_relative_eq!(coupon_pmf(&x, 1, 2).unwrap().value, 0.5, max_relative = 1e-15);
        assert_relative_eq!(coupon_pmf(&x, 1, 3).unwrap().value, 0.25, max_relative = 1e-15);
        assert_eq!(coupon_pmf(&sp(&[1.0 / 3.0, 1.0 / 3.0]), 2, 2).unwrap().value, 0.0);
        assert_eq!(coupon_pmf(&x, 2, 5).unwrap().value, 0.0);
        assert!(coupon_pmf(&x, 0, 3).is_err());
        assert!(coupon_pmf(&x, 1, 1).is_err());
    }

    #[test]
    fn coupon_pmf_sums_to_one() {
        for x in [sp(&[0.2, 0.3, 0.1, 0.25]), sp(&[0.5, 0.2]), sp(&[0.05, 0.05, 0.3])] {
            for k in 1..=x.d() {
                let total: f64 = (2..3000).map(|p| coupon_pmf(&x, k, p).unwrap().value).sum();
                assert_relative_eq!(total, 1.0, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn order_examples() {
        let u = sp(&[1.0 / 3.0, 1.0 / 3.0]);
        let orders = all_orders(3);
        assert_eq!(orders.len(), 6);
        for o in &orders {
            assert_relative_eq!(disappearance_order_prob(&u, o).unwrap(), 1.0 / 6.0, max_relative = 1e-14);
        }
        let x = sp(&[0.5, 0.3]);
        assert_relative_eq!(disappearance_order_prob(&x, &[1, 2, 3]).unwrap(), 0.3, max_relative = 1e-14);
        let total: f64 = orders.iter().map(|o| disappearance_order_prob(&x, o).unwrap()).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        assert!(disappearance_order_prob(&x, &[1, 1, 3]).is_err());
        assert_eq!(disappearance_order_prob(&sp(&[1.0, 0.0]), &[2, 3, 1]).unwrap(), 0.0);
    }

    #[test]
    fn first_to_disappear_examples() {
        let x = sp(&[0.5, 0.3]);
        let p = first_to_disappear_prob(&x, 3).unwrap();
        assert_relative_eq!(p, 0.15 * (1.0 / 0.5 + 1.0 / 0.7), max_relative = 1e-14);
        assert_relative_eq!(p, 0.514_285_714_285_714_3, max_relative = 1e-14);
        let total: f64 = (1..=3).map(|e| first_to_disappear_prob(&x, e).unwrap()).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        let u = sp(&[1.0 / 3.0, 1.0 / 3.0]);
        assert_relative_eq!(first_to_disappear_prob(&u, 2).unwrap(), 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn kingman_mean_examples() {
        let v = mean_fixation_kingman(&sp(&[0.5]), 1, 1.0).unwrap().value;
        assert_relative_eq!(v, 2.0 * std::f64::consts::LN_2, max_relative = 1e-14);
        let v = mean_fixation_kingman(&sp(&[1.0 / 3.0, 1.0 / 3.0]), 1, 1.0).unwrap().value;
        assert_relative_eq!(v, 4.0 * (1.5f64).ln(), max_relative = 1e-13);
        assert_eq!(mean_fixation_kingman(&sp(&[1.0, 0.0]), 1, 1.0).unwrap().value, 0.0);
        assert!(mean_fixation_kingman(&sp(&[0.5]), 1, 0.0).is_err());
    }

    #[test]
    fn explosion_beta_examples() {
        let cfg = QuadratureConfig::tight();
        assert_relative_eq!(mean_explosion_beta(1, 1.5, &cfg).unwrap().value, 2.25, max_relative = 1e-10);
        // α = 3/2: α ∫₀¹ (1 − u²)²/(1 − u) du = 1.5 · 2∫(1 + u)(1 − u²)/2 … = 1.5 · 11/12
        assert_relative_eq!(mean_explosion_beta(2, 1.5, &cfg).unwrap().value, 1.375, max_relative = 1e-10);
        let values: Vec<f64> = (1..=20).map(|k| mean_explosion_beta(k, 1.3, &cfg).unwrap().value).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        assert!(mean_explosion_beta(0, 1.5, &cfg).is_err());
        assert!(mean_explosion_beta(1, 2.0, &cfg).is_err());
    }

    #[test]
    fn explosion_beta_matches_direct_integral() {
        // Independent oracle: the original y-integral, split away from its endpoints.
        let cfg = QuadratureConfig::default();
        for &alpha in &[1.2, 1.5, 1.8] {
            for k in [1u64, 3] {
                let f = |y: f64| y.powi(k as i32) / ((1.0 - y) * ((1.0 - y).powf(1.0 - alpha) - 1.0));
                let body = integrate(f, 0.0, 1.0 - 1e-9, &cfg).unwrap().value;
                // ∫_{1−ε}^1 ≈ ∫ (1−y)^{α−2} dy = ε^{α−1}/(α−1)
                let tail = 1e-9f64.powf(alpha - 1.0) / (alpha - 1.0);
                let direct = alpha * (alpha - 1.0) * (body + tail);
                let fast = mean_explosion_beta(k, alpha, &cfg).unwrap().value;
                assert_relative_eq!(fast, direct, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn phi_examples() {
        let cfg = QuadratureConfig::tight();
        assert_eq!(phi0(0.0, 1.5).unwrap(), 1.0);
        assert_relative_eq!(phi0(1e-9, 1.5).unwrap(), 1.0, max_relative = 1e-8);
        for &alpha in &[1.2, 1.5] {
            let h = 1e-4;
            let slope = (phi0(h, alpha).unwrap() - phi0(0.0, alpha).unwrap()) / h;
            assert_relative_eq!(slope, alpha / 2.0, max_relative = 1e-3);
        }
        for k in 1..=5u64 {
            let a = phi_generating(k + 1, 1.0, 1.5, &cfg).unwrap().value;
            let b = mean_explosion_beta(k, 1.5, &cfg).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
        assert!(phi_generating(1, 0.5, 1.5, &cfg).is_err());
    }

    #[test]
    fn beta_fast_path_matches_mixture() {
        let quad = QuadratureConfig::tight();
        let series = SeriesConfig { tail_tol: 1e-13, max_terms: 100_000 };
        for (x, k, alpha) in [(sp(&[0.5]), 1, 1.5), (sp(&[0.2, 0.3]), 1, 1.2), (sp(&[0.2, 0.3]), 2, 1.8)] {
            let fast = mean_fixation_beta(&x, k, alpha, &quad).unwrap().value;
            let mix = mean_fixation_beta_mixture(&x, k, alpha, &quad, &series).unwrap().value;
            assert_relative_eq!(fast, mix, max_relative = 1e-6);
        }
    }

    #[test]
    fn charfunc_normalisation_and_derivative() {
        let cfg = SeriesConfig { tail_tol: 1e-14, max_terms: 100_000 };
        let x = sp(&[0.5]);
        assert_eq!(fixation_charfunc_kingman(&x, 1, 0.0, &cfg).unwrap(), Complex64::new(1.0, 0.0));
        let tiny = fixation_charfunc_kingman(&x, 1, 1e-12, &cfg).unwrap();
        assert_relative_eq!(tiny.re, 1.0, max_relative = 1e-9);
        let h = 1e-4;
        let plus = fixation_charfunc_kingman(&x, 1, h, &cfg).unwrap();
        let minus = fixation_charfunc_kingman(&x, 1, -h, &cfg).unwrap();
        let deriv = (plus - minus) / (2.0 * h);
        let mean = mean_fixation_kingman(&x, 1, 1.0).unwrap().value;
        assert_relative_eq!(deriv.im, mean, max_relative = 1e-4);
        for i in -20..=20 {
            let v = fixation_charfunc_kingman(&sp(&[0.2, 0.3]), 1, i as f64 / 2.0, &cfg).unwrap();
            assert!(v.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn stationary_examples() {
        assert_relative_eq!(stationary_time_mean(2.0, 2.0).unwrap().value, 1.0, max_relative = 1e-12);
        let basel = std::f64::consts::PI.powi(2) / 6.0;
        assert_relative_eq!(stationary_time_mean(2.0, 1.0).unwrap().value, basel, max_relative = 1e-12);
        assert!(stationary_time_mean_digamma(2.0, 1.0).is_err());
        for &(c, theta) in &[(1.0, 0.8), (2.0, 2.0), (0.7, 3.0), (3.0, 0.2)] {
            let series = stationary_time_mean(c, theta).unwrap().value;
            let dg = stationary_time_mean_digamma(c, theta).unwrap();
            assert_relative_eq!(series, dg, max_relative = 1e-9);
        }
        assert!(stationary_time_mean(1.0, 0.0).is_err());
    }

    #[test]
    fn grid_corners_and_center() {
        let rows = fixation_grid(3, 1, |x, k| Ok(mean_fixation_kingman(x, k, 1.0)?.value)).unwrap();
        assert_eq!(rows.len(), 10);
        for &(x1, x2, v) in &rows {
            if (x1 == 1.0) || (x2 == 1.0) || (x1 == 0.0 && x2 == 0.0) {
                assert_eq!(v, 0.0);
            }
        }
        let center = rows.iter().find(|r| r.0 == 1.0 / 3.0 && r.1 == 1.0 / 3.0).unwrap();
        assert_relative_eq!(center.2, 4.0 * 1.5f64.ln(), max_relative = 1e-12);
    }
}
