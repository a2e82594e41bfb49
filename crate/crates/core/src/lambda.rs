//! The measure Λ on `[0, 1]`, model parameters, and the rates derived from Λ.
//!
//! Λ is the sum of a Kingman atom at zero, an optional scaled
//! Beta(2 − α, α) density and finitely many atoms on `(0, 1]`.
//!
//! A measure made only of atoms on `(0, 1]` never comes down from infinity:
//! its reproduction events arrive at finite total rate `Σ w/r²`, so over any
//! time interval only finitely many events occur, and each event merges a
//! Bernoulli(r) thinning of the blocks. Starting from infinitely many blocks,
//! each event leaves infinitely many unmarked blocks behind, so the block
//! count stays infinite.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{binomial, ln_beta, ln_gamma, ln_gamma_ratio};

/// Beta(2 − α, α) component scaled by `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaComponent {
    pub alpha: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl BetaComponent {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        let b = Self { alpha, scale };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(domain!("Beta parameter alpha must lie in (1, 2), got {}", self.alpha));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(domain!("Beta scale must be positive and finite, got {}", self.scale));
        }
        Ok(())
    }

    /// `ln B(2 − α, α)`.
    fn ln_norm(&self) -> f64 {
        ln_beta(2.0 - self.alpha, self.alpha)
    }

    /// Density of the component at `r ∈ (0, 1)`.
    pub fn density(&self, r: f64) -> f64 {
        let a = self.alpha;
        self.scale * ((1.0 - a) * r.ln() + (a - 1.0) * (-r).ln_1p() - self.ln_norm()).exp()
    }

    /// `∫ r^{k−2} (1 − r)^{n−k}` against this component.
    pub fn lambda_rate(&self, n: u64, k: u64) -> f64 {
        let a = self.alpha;
        self.scale * (ln_beta(k as f64 - a, (n - k) as f64 + a) - self.ln_norm()).exp()
    }

    /// Total rate at which `b` blocks experience some merger:
    /// `Γ(b − 1 + α) / (α Γ(α) Γ(b − 1))`.
    pub fn total_merger_rate(&self, b: u64) -> f64 {
        if b < 2 {
            return 0.0;
        }
        self.scale * self.level_factor(b - 1) / self.alpha
    }

    /// `Γ(n + α) / (Γ(n) Γ(α))`, the level-dependent factor of the
    /// fixation-line jump rate.
    pub fn level_factor(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        (ln_gamma_ratio(n as f64, self.alpha) - ln_gamma(self.alpha)).exp()
    }

    /// Probability that a fixation-line jump driven by this component has size `l`:
    /// `α Γ(l + 1 − α) / (Γ(l + 2) Γ(2 − α))`. It does not depend on the level.
    pub fn jump_pmf(&self, l: u64) -> f64 {
        if l == 0 {
            return 0.0;
        }
        let a = self.alpha;
        a * (-ln_gamma_ratio(l as f64 + 1.0 - a, 1.0 + a) - ln_gamma(2.0 - a)).exp()
    }

    /// `P(L > l) = Γ(l + 2 − α) / (Γ(2 − α) Γ(l + 2))`.
    pub fn jump_survival(&self, l: u64) -> f64 {
        self.ln_jump_survival(l).exp()
    }

    pub fn ln_jump_survival(&self, l: u64) -> f64 {
        let a = self.alpha;
        -ln_gamma_ratio(l as f64 + 2.0 - a, a) - ln_gamma(2.0 - a)
    }
}

/// A point mass `weight · δ_r` with `r ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 2]", from = "[f64; 2]")]
pub struct Atom {
    pub r: f64,
    pub weight: f64,
}

impl From<Atom> for [f64; 2] {
    fn from(a: Atom) -> Self {
        [a.r, a.weight]
    }
}

impl From<[f64; 2]> for Atom {
    fn from([r, weight]: [f64; 2]) -> Self {
        Atom { r, weight }
    }
}

impl Atom {
    pub fn lambda_rate(&self, n: u64, k: u64) -> f64 {
        let r = self.r;
        if r == 1.0 {
            return if n == k { self.weight } else { 0.0 };
        }
        self.weight * ((k - 2) as f64 * r.ln() + (n - k) as f64 * (-r).ln_1p()).exp()
    }

    pub fn total_merger_rate(&self, b: u64) -> f64 {
        self.weight * binomial_at_least_two(b, self.r) / (self.r * self.r)
    }
}

/// `P(Binomial(b, r) ≥ 2)` without cancellation for small `b·r`.
pub fn binomial_at_least_two(b: u64, r: f64) -> f64 {
    if b < 2 || r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    let bf = b as f64;
    let ln_q = (-r).ln_1p();
    let p0 = (bf * ln_q).exp();
    let p1 = bf * r * ((bf - 1.0) * ln_q).exp();
    let direct = 1.0 - p0 - p1;
    if direct > 0.1 {
        return direct;
    }
    let odds = r / (1.0 - r);
    let mut term = binomial(b, 2) * r * r * ((bf - 2.0) * ln_q).exp();
    let mut sum = 0.0;
    let mut k = 2u64;
    while term > 0.0 {
        sum += term;
        if term < 1e-17 * sum || k >= b {
            break;
        }
        term *= (b - k) as f64 / (k + 1) as f64 * odds;
        k += 1;
    }
    sum
}

/// The measure Λ.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    #[serde(rename = "kingman", default)]
    pub kingman_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaComponent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<Atom>,
}

impl LambdaSpec {
    /// `c · δ₀`.
    pub fn kingman(c: f64) -> Result<Self> {
        let s = Self { kingman_mass: c, ..Self::default() };
        s.validate()?;
        Ok(s)
    }

    /// The probability measure Beta(2 − α, α).
    pub fn beta(alpha: f64) -> Result<Self> {
        Self::beta_scaled(alpha, 1.0)
    }

    pub fn beta_scaled(alpha: f64, scale: f64) -> Result<Self> {
        Ok(Self { beta: Some(BetaComponent::new(alpha, scale)?), ..Self::default() })
    }

    pub fn with_kingman(mut self, c: f64) -> Result<Self> {
        self.kingman_mass = c;
        self.validate()?;
        Ok(self)
    }

    pub fn with_atom(mut self, r: f64, weight: f64) -> Result<Self> {
        self.atoms.push(Atom { r, weight });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kingman_mass >= 0.0 && self.kingman_mass.is_finite()) {
            return Err(domain!("Kingman mass must be nonnegative and finite, got {}", self.kingman_mass));
        }
        if let Some(b) = &self.beta {
            b.validate()?;
        }
        for a in &self.atoms {
            if !(a.r > 0.0 && a.r <= 1.0) {
                return Err(domain!("atom location must lie in (0, 1], got {}", a.r));
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(domain!("atom weight must be positive and finite, got {}", a.weight));
            }
        }
        Ok(())
    }

    /// `Λ((0, 1])`.
    pub fn open_mass(&self) -> f64 {
        self.beta.map_or(0.0, |b| b.scale) + self.atoms.iter().map(|a| a.weight).sum::<f64>()
    }

    /// `Λ([0, 1])`.
    pub fn total_mass(&self) -> f64 {
        self.kingman_mass + self.open_mass()
    }

    pub fn comes_down_from_infinity(&self) -> bool {
        self.kingman_mass > 0.0 || self.beta.is_some()
    }

    /// `λ_{n,k} = ∫_{(0,1]} r^{k−2} (1 − r)^{n−k} Λ(dr)`; the Kingman atom does not contribute.
    pub fn lambda_rate(&self, n: u64, k: u64) -> Result<f64> {
        if k < 2 || k > n {
            return Err(domain!("lambda_rate needs 2 <= k <= n, got n = {n}, k = {k}"));
        }
        Ok(self.lambda_rate_unchecked(n, k))
    }

    pub(crate) fn lambda_rate_unchecked(&self, n: u64, k: u64) -> f64 {
        let beta = self.beta.map_or(0.0, |b| b.lambda_rate(n, k));
        beta + self.atoms.iter().map(|a| a.lambda_rate(n, k)).sum::<f64>()
    }

    /// Rate at which `b` blocks experience some multiple-merger event from the
    /// `(0, 1]` part: `Σ_{k=2}^{b} C(b, k) λ_{b,k}`.
    pub fn open_merger_rate(&self, b: u64) -> f64 {
        let beta = self.beta.map_or(0.0, |c| c.total_merger_rate(b));
        beta + self.atoms.iter().map(|a| a.total_merger_rate(b)).sum::<f64>()
    }

    /// Total merger rate of `b` blocks including binary Kingman mergers.
    pub fn total_merger_rate(&self, b: u64) -> f64 {
        self.kingman_mass * binomial(b, 2) + self.open_merger_rate(b)
    }
}

/// A point of the simplex `Δ_d`; the frequency of type `d + 1` is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    x: Vec<f64>,
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;
    fn try_from(x: Vec<f64>) -> Result<Self> {
        Self::new(x)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.x
    }
}

impl SimplexPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(domain!("a simplex point needs at least one coordinate"));
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(domain!("simplex coordinates must lie in [0, 1], got {x:?}"));
        }
        let s: f64 = x.iter().sum();
        if s > 1.0 + 1e-12 {
            return Err(domain!("simplex coordinates sum to {s} > 1"));
        }
        Ok(Self { x })
    }

    /// The vertex `e_i` (1-based); `i = d + 1` gives the origin.
    pub fn vertex(d: usize, i: usize) -> Result<Self> {
        if i == 0 || i > d + 1 {
            return Err(domain!("vertex index {i} outside [1, {}]", d + 1));
        }
        let mut x = vec![0.0; d];
        if i <= d {
            x[i - 1] = 1.0;
        }
        Ok(Self { x })
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    /// All `d + 1` frequencies.
    pub fn full(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.push((1.0 - self.x.iter().sum::<f64>()).max(0.0));
        v
    }

    /// Frequency of type `i` (1-based, up to `d + 1`).
    pub fn get(&self, i: usize) -> f64 {
        if i <= self.x.len() {
            self.x[i - 1]
        } else {
            (1.0 - self.x.iter().sum::<f64>()).max(0.0)
        }
    }
}

/// Full parametrisation of the multi-type process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub d: usize,
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_boundary_nu: bool,
}

impl ModelParams {
    /// Neutral model without mutation.
    pub fn neutral(d: usize, lambda: LambdaSpec) -> Result<Self> {
        Self::new(d, lambda, 0.0, vec![0.0; d])
    }

    pub fn new(d: usize, lambda: LambdaSpec, theta: f64, nu: Vec<f64>) -> Result<Self> {
        let p = Self { d, lambda, theta, nu, allow_boundary_nu: false };
        p.validate()?;
        Ok(p)
    }

    /// Accept ν on the boundary of the simplex.
    pub fn boundary_nu(mut self) -> Result<Self> {
        self.allow_boundary_nu = true;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(domain!("d must be positive"));
        }
        self.lambda.validate()?;
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(domain!("theta must be nonnegative and finite, got {}", self.theta));
        }
        if self.nu.len() != self.d {
            return Err(domain!("nu has {} entries, expected d = {}", self.nu.len(), self.d));
        }
        if self.nu.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(domain!("nu entries must lie in [0, 1], got {:?}", self.nu));
        }
        let s: f64 = self.nu.iter().sum();
        if s > 1.0 + 1e-12 {
            return Err(domain!("nu sums to {s} > 1"));
        }
        if self.theta > 0.0 && !self.allow_boundary_nu && (self.nu.iter().any(|&v| v <= 0.0) || s >= 1.0) {
            return Err(domain!("nu must lie in the interior of the simplex when theta > 0, got {:?}", self.nu));
        }
        Ok(())
    }

    pub fn nu_point(&self) -> SimplexPoint {
        SimplexPoint { x: self.nu.clone() }
    }
}

/// `λ_{n,k}` with argument checks.
pub fn lambda_rate(spec: &LambdaSpec, n: u64, k: u64) -> Result<f64> {
    spec.lambda_rate(n, k)
}

/// Rate at which the fixation line jumps from `n` to `n + l`:
/// `1{l=1}[c·C(n+1, 2) + θ(n+1)] + C(n+l, l+1) ∫ r^{l+1}(1−r)^n r^{−2} Λ(dr)`.
/// The Kingman atom enters only through the `l = 1` term.
pub fn fixation_jump_rate(params: &ModelParams, n: u64, l: u64) -> Result<f64> {
    if l == 0 {
        return Err(domain!("jump size must be at least 1"));
    }
    let mut rate = 0.0;
    if l == 1 {
        rate += params.lambda.kingman_mass * binomial(n + 1, 2) + params.theta * (n + 1) as f64;
    }
    if n == 0 {
        return Ok(rate);
    }
    if let Some(b) = &params.lambda.beta {
        rate += b.scale * b.level_factor(n) * b.jump_pmf(l) / b.alpha;
    }
    for a in &params.lambda.atoms {
        if a.r < 1.0 {
            let ln_c = ln_gamma((n + l + 1) as f64) - ln_gamma((l + 2) as f64) - ln_gamma(n as f64);
            rate += a.weight * (ln_c + (l as f64 - 1.0) * a.r.ln() + n as f64 * (-a.r).ln_1p()).exp();
        }
    }
    Ok(rate)
}

/// Same quantity evaluated through `C(n+l, l+1) λ_{n+l+1, l+1}`.
pub fn fixation_jump_rate_via_lambda(params: &ModelParams, n: u64, l: u64) -> Result<f64> {
    if l == 0 {
        return Err(domain!("jump size must be at least 1"));
    }
    let mut rate = 0.0;
    if l == 1 {
        rate += params.lambda.kingman_mass * binomial(n + 1, 2) + params.theta * (n + 1) as f64;
    }
    Ok(rate + binomial(n + l, l + 1) * params.lambda.lambda_rate_unchecked(n + l + 1, l + 1))
}

/// `Σ_{l≥1}` of [`fixation_jump_rate`], in closed form. An atom at `r = 1`
/// adds its weight for `n ≥ 1`: that event sends the line to infinity.
pub fn total_up_rate(params: &ModelParams, n: u64) -> f64 {
    params.lambda.kingman_mass * binomial(n + 1, 2) + params.theta * (n + 1) as f64 + params.lambda.open_merger_rate(n + 1)
}

/// Part of [`total_up_rate`] that sends the line to infinity in one jump.
pub fn explosive_rate(params: &ModelParams, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    params.lambda.atoms.iter().filter(|a| a.r == 1.0).map(|a| a.weight).sum()
}

pub fn comes_down_from_infinity(spec: &LambdaSpec) -> bool {
    spec.comes_down_from_infinity()
}

/// Parse a Λ block: `kingman = …`, `beta = {alpha = …, scale = …}`, `atoms = [[r, w], …]`.
pub fn parse_lambda(text: &str) -> Result<LambdaSpec> {
    let spec: LambdaSpec = toml::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn lambda_to_string(spec: &LambdaSpec) -> String {
    let mut out = format!("kingman = {:?}\n", spec.kingman_mass);
    if let Some(b) = &spec.beta {
        out.push_str(&format!("beta = {{ alpha = {:?}, scale = {:?} }}\n", b.alpha, b.scale));
    }
    if !spec.atoms.is_empty() {
        let items: Vec<String> = spec.atoms.iter().map(|a| format!("[{:?}, {:?}]", a.r, a.weight)).collect();
        out.push_str(&format!("atoms = [{}]\n", items.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureConfig};
    use approx::assert_relative_eq;

    fn beta_quadrature(alpha: f64, n: u64, k: u64) -> f64 {
        let b = BetaComponent::new(alpha, 1.0).unwrap();
        integrate(
            |r: f64| r.powi(k as i32 - 2) * (1.0 - r).powi((n - k) as i32) * b.density(r),
            0.0,
            1.0,
            &QuadratureConfig::tight(),
        )
        .unwrap()
        .value
    }

    #[test]
    fn lambda_rate_examples() {
        let beta = LambdaSpec::beta(1.5).unwrap();
        assert_relative_eq!(beta.lambda_rate(2, 2).unwrap(), 1.0, max_relative = 1e-12);
        let atom = LambdaSpec::default().with_atom(1.0, 0.7).unwrap();
        assert_eq!(atom.lambda_rate(5, 5).unwrap(), 0.7);
        for k in 2..5 {
            assert_eq!(atom.lambda_rate(5, k).unwrap(), 0.0);
        }
        let expected = (ln_beta(0.5, 2.5) - ln_beta(0.5, 1.5)).exp();
        assert_relative_eq!(beta.lambda_rate(3, 2).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(beta_quadrature(1.5, 3, 2), expected, max_relative = 1e-8);
        assert!(beta.lambda_rate(3, 1).is_err());
        assert!(beta.lambda_rate(3, 4).is_err());
    }

    #[test]
    fn beta_closed_form_matches_quadrature_grid() {
        let mut count = 0;
        for &alpha in &[1.2, 1.5, 1.8, 1.95] {
            for &(n, k) in &[(2, 2), (3, 2), (5, 3), (8, 8), (12, 4)] {
                let b = BetaComponent::new(alpha, 1.0).unwrap();
                assert_relative_eq!(b.lambda_rate(n, k), beta_quadrature(alpha, n, k), max_relative = 1e-8);
                count += 1;
            }
        }
        assert_eq!(count, 20);
    }

    #[test]
    fn fixation_rate_examples() {
        let k1 = ModelParams::neutral(1, LambdaSpec::kingman(1.0).unwrap()).unwrap();
        assert_eq!(fixation_jump_rate(&k1, 1, 1).unwrap(), 1.0);
        let k2 = ModelParams::new(1, LambdaSpec::kingman(1.0).unwrap(), 2.0, vec![0.5]).unwrap();
        assert_eq!(fixation_jump_rate(&k2, 0, 1).unwrap(), 2.0);
        for &alpha in &[1.1, 1.5, 1.9] {
            let p = ModelParams::neutral(1, LambdaSpec::beta(alpha).unwrap()).unwrap();
            assert_relative_eq!(total_up_rate(&p, 1), 1.0, max_relative = 1e-12);
            let direct: f64 = (1..20000).map(|l| fixation_jump_rate(&p, 1, l).unwrap()).sum();
            let tail = p.lambda.beta.unwrap().jump_survival(19999);
            assert_relative_eq!(direct + tail, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn total_up_rate_beta_matches_gamma_form() {
        let p = ModelParams::neutral(1, LambdaSpec::beta(1.5).unwrap()).unwrap();
        for &k in &[1u64, 2, 10, 1000, 1_000_000] {
            let kf = k as f64;
            // Γ(k + a)/Γ(k) ~ k^a (1 + a(a−1)/(2k) + a(a−1)(a−2)(3a−1)/(24k²)) for large k.
            let ratio = if k < 1000 {
                (ln_gamma(kf + 1.5) - ln_gamma(kf)).exp()
            } else {
                let a: f64 = 1.5;
                kf.powf(a) * (1.0 + a * (a - 1.0) / (2.0 * kf) + a * (a - 1.0) * (a - 2.0) * (3.0 * a - 1.0) / (24.0 * kf * kf))
            };
            let expected = ratio / (1.5 * crate::special::gamma(1.5));
            assert_relative_eq!(total_up_rate(&p, k), expected, max_relative = 1e-10);
        }
        assert_eq!(total_up_rate(&p, 0), 0.0);
    }

    #[test]
    fn total_up_rate_kingman() {
        let p = ModelParams::new(2, LambdaSpec::kingman(1.5).unwrap(), 0.7, vec![0.2, 0.3]).unwrap();
        for n in 0..30u64 {
            assert_relative_eq!(
                total_up_rate(&p, n),
                1.5 * binomial(n + 1, 2) + 0.7 * (n + 1) as f64,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn two_code_paths_agree() {
        let spec = LambdaSpec::beta_scaled(1.3, 0.6).unwrap().with_kingman(0.4).unwrap().with_atom(0.3, 0.5).unwrap();
        let p = ModelParams::new(1, spec, 0.2, vec![0.5]).unwrap();
        for n in 0..40 {
            for l in 1..30 {
                let a = fixation_jump_rate(&p, n, l).unwrap();
                let b = fixation_jump_rate_via_lambda(&p, n, l).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-10, epsilon = 1e-300);
            }
        }
    }

    #[test]
    fn closed_form_total_matches_direct_sum() {
        let specs = [
            LambdaSpec::kingman(1.0).unwrap(),
            LambdaSpec::default().with_atom(0.3, 1.0).unwrap().with_atom(0.05, 2.0).unwrap(),
            LambdaSpec::default().with_atom(0.4, 1.0).unwrap(),
        ];
        for spec in specs {
            let p = ModelParams::new(1, spec, 0.3, vec![0.5]).unwrap();
            for n in 0..=50 {
                let direct: f64 = (1..=200).map(|l| fixation_jump_rate(&p, n, l).unwrap()).sum();
                assert_relative_eq!(direct, total_up_rate(&p, n), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn at_least_two_small_and_large() {
        assert_relative_eq!(binomial_at_least_two(2, 1e-9), 1e-18, max_relative = 1e-9);
        assert_relative_eq!(binomial_at_least_two(10, 0.5), 1.0 - 11.0 / 1024.0, max_relative = 1e-14);
        assert_eq!(binomial_at_least_two(1, 0.5), 0.0);
    }

    #[test]
    fn coming_down() {
        assert!(LambdaSpec::kingman(0.1).unwrap().comes_down_from_infinity());
        assert!(LambdaSpec::beta(1.2).unwrap().comes_down_from_infinity());
        assert!(!LambdaSpec::default().with_atom(0.5, 1.0).unwrap().comes_down_from_infinity());
    }

    #[test]
    fn validation() {
        assert!(LambdaSpec::kingman(-1.0).is_err());
        assert!(LambdaSpec::beta(2.0).is_err());
        assert!(LambdaSpec::default().with_atom(0.0, 1.0).is_err());
        assert!(LambdaSpec::default().with_atom(0.5, 0.0).is_err());
        let k = LambdaSpec::kingman(1.0).unwrap();
        assert!(ModelParams::new(1, k.clone(), 1.0, vec![0.0]).is_err());
        assert!(ModelParams::new(1, k.clone(), 1.0, vec![1.0]).is_err());
        assert!(ModelParams::new(1, k.clone(), 1.0, vec![0.0]).is_err());
        assert!(ModelParams { d: 1, lambda: k, theta: 1.0, nu: vec![0.0], allow_boundary_nu: false }
            .boundary_nu()
            .is_ok());
        assert!(SimplexPoint::new(vec![0.6, 0.5]).is_err());
    }

    #[test]
    fn total_mass() {
        let spec = LambdaSpec::beta_scaled(1.5, 0.25).unwrap().with_kingman(0.5).unwrap().with_atom(0.2, 0.125).unwrap();
        assert_relative_eq!(spec.total_mass(), 0.875, max_relative = 1e-12);
    }

    #[test]
    fn config_round_trip() {
        let spec = LambdaSpec::beta_scaled(1.5, 0.25).unwrap().with_kingman(0.5).unwrap().with_atom(0.2, 0.125).unwrap();
        let text = lambda_to_string(&spec);
        assert_eq!(parse_lambda(&text).unwrap(), spec);
        let parsed = parse_lambda("kingman = 1.0\nbeta = {alpha = 1.5}\natoms = [[0.5, 2.0]]").unwrap();
        assert_eq!(parsed.beta.unwrap().scale, 1.0);
        assert!(parse_lambda("kingmann = 1.0").is_err());
        assert!(parse_lambda("beta = {alpha = 2.5}").is_err());
    }
}
