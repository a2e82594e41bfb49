//! The fixation line `F^k` as a standalone Markov chain, its generalized
//! inverse `I^k(n)`, and explosion times `I^k(∞)`.
//!
//! Jump sizes are drawn by decomposing the jump rate into the contributions of
//! the Kingman atom and mutation (always `l = 1`), the Beta component (whose
//! jump-size law does not depend on the level) and each atom of Λ (a shifted
//! negative binomial). Each component has an exact sampler, so no per-level
//! table of the jump-size law is needed; only the component weights are cached.
//!
//! This sampler reproduces the law of a single fixation line. The joint law of
//! several lines on one probability space is produced by [`crate::lookdown`].

use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};

use crate::error::{domain, Error, Result};
use crate::lambda::{binomial_at_least_two, total_up_rate, Atom, BetaComponent, ModelParams};
use crate::special::{binomial, ln_gamma, ln_gamma_ratio, ln_1p_over, trigamma};

/// Jumps of `F^k` up to the first level at or above `truncation_level`.
/// Levels beyond the truncation are recorded as the truncation level itself.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationLinePath {
    pub start_level: u64,
    pub jumps: Vec<(f64, u64)>,
    pub truncation_level: u64,
}

impl FixationLinePath {
    /// `I^k(n) = inf{t : F^k_t ≥ n}`; infinite if the path never gets there.
    pub fn inverse_time(&self, n: u64) -> Result<f64> {
        if n > self.truncation_level {
            return Err(domain!("level {n} lies beyond the truncation level {}", self.truncation_level));
        }
        if n <= self.start_level {
            return Ok(0.0);
        }
        Ok(self.jumps.iter().find(|&&(_, level)| level >= n).map_or(f64::INFINITY, |&(t, _)| t))
    }

    /// `F^k_t`.
    pub fn level_at(&self, t: f64) -> u64 {
        self.jumps.iter().take_while(|&&(s, _)| s <= t).last().map_or(self.start_level, |&(_, l)| l)
    }

    pub fn final_level(&self) -> u64 {
        self.jumps.last().map_or(self.start_level, |&(_, l)| l)
    }

    /// Time at which the truncation level was reached, if it was.
    pub fn hitting_time(&self) -> Option<f64> {
        if self.start_level >= self.truncation_level {
            return Some(0.0);
        }
        self.jumps.last().filter(|&&(_, l)| l >= self.truncation_level).map(|&(t, _)| t)
    }

    /// Levels visited, truncation level included.
    pub fn visited_levels(&self) -> BTreeSet<u64> {
        std::iter::once(self.start_level).chain(self.jumps.iter().map(|&(_, l)| l)).collect()
    }

    /// Write `time,level` rows, starting with the initial level at time zero.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,level")?;
        writeln!(out, "0,{}", self.start_level)?;
        for (t, l) in &self.jumps {
            writeln!(out, "{t},{l}")?;
        }
        Ok(())
    }
}

/// One sample of `I^k(∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplosionSample {
    /// Time to reach the truncation level, or the full explosion time when `exact`.
    pub elapsed: f64,
    /// Upper bound on the expected time still missing from `elapsed`.
    pub tail_bound: f64,
    pub exact: bool,
}

const BETA_TABLE_LEN: u64 = 4096;
const RATE_TABLE_LIMIT: u64 = 1 << 20;
const KINGMAN_EXPLICIT_TERMS: u64 = 256;
const KINGMAN_TAIL_TERMS: u64 = 1_000_000;

/// Jump-size law of the Beta component: an alias table over `1..=4096`
/// plus one slot for the tail, which is inverted by bisection on `ln P(L > l)`.
#[derive(Debug, Clone)]
struct BetaJumps {
    component: BetaComponent,
    alias: WeightedAliasIndex<f64>,
    tail_mass: f64,
}

impl BetaJumps {
    fn new(component: BetaComponent) -> Result<Self> {
        let a = component.alpha;
        let mut weights = Vec::with_capacity(BETA_TABLE_LEN as usize + 1);
        let mut p = a / 2.0;
        for l in 1..=BETA_TABLE_LEN {
            weights.push(p);
            p *= (l as f64 + 1.0 - a) / (l as f64 + 2.0);
        }
        let tail_mass = component.jump_survival(BETA_TABLE_LEN);
        weights.push(tail_mass);
        let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::Numeric(format!("alias table: {e}")))?;
        Ok(Self { component, alias, tail_mass })
    }

    /// A jump size, or `cap` if it is at least `cap`.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, cap: u64) -> u64 {
        let slot = self.alias.sample(rng) as u64;
        if slot < BETA_TABLE_LEN {
            return (slot + 1).min(cap);
        }
        if cap <= BETA_TABLE_LEN + 1 {
            return cap;
        }
        // L = min{l : S(l) ≤ v} with v uniform on (0, S(4096)).
        let v: f64 = rng.random::<f64>();
        let ln_v = (v * self.tail_mass).ln();
        let c = &self.component;
        if c.ln_jump_survival(cap - 1) > ln_v {
            return cap;
        }
        let (mut lo, mut hi) = (BETA_TABLE_LEN, BETA_TABLE_LEN * 2);
        while hi < cap - 1 && c.ln_jump_survival(hi) > ln_v {
            lo = hi;
            hi = hi.saturating_mul(2).min(cap - 1);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if c.ln_jump_survival(mid) > ln_v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Size `m ≥ 2` of a negative-binomial `NB(n, r)` variable conditioned on `m ≥ 2`,
/// with `P(M = m) ∝ C(m + n − 1, m) r^m (1 − r)^n`.
fn sample_conditioned_negbin<R: Rng + ?Sized>(rng: &mut R, n: u64, r: f64) -> u64 {
    let p2 = binomial_at_least_two(n + 1, r);
    if p2 >= 0.5 {
        let gamma = Gamma::new(n as f64, r / (1.0 - r)).expect("valid gamma parameters");
        loop {
            let lambda: f64 = gamma.sample(rng);
            if lambda <= 0.0 {
                continue;
            }
            let m = match Poisson::new(lambda) {
                Ok(p) => p.sample(rng) as u64,
                Err(_) => u64::MAX,
            };
            if m >= 2 {
                return m;
            }
        }
    }
    let nf = n as f64;
    let target = rng.random::<f64>() * p2;
    let mut m = 2u64;
    let mut pmf = (ln_gamma(nf + 2.0) - ln_gamma(nf) - std::f64::consts::LN_2 + 2.0 * r.ln() + nf * (-r).ln_1p()).exp();
    let mut cum = pmf;
    while cum < target && pmf > 0.0 {
        pmf *= (m as f64 + nf) / (m as f64 + 1.0) * r;
        m += 1;
        cum += pmf;
    }
    m
}

#[derive(Debug, Clone, Copy)]
enum Component {
    Single,
    Beta,
    Atom(usize),
    Explosive,
}

/// Sampler for paths and explosion times of the standalone fixation line.
#[derive(Debug, Clone)]
pub struct FixationLineSampler {
    params: ModelParams,
    beta: Option<BetaJumps>,
    atoms: Vec<Atom>,
    explosive: f64,
    /// Per level: cumulative component weights `[single, beta, atoms…, explosive]`.
    table: Vec<f64>,
    table_levels: u64,
    stride: usize,
    kingman_tail: Option<KingmanTail>,
}

#[derive(Debug, Clone, Copy)]
struct KingmanTail {
    from: u64,
    mean: f64,
    variance: f64,
}

impl FixationLineSampler {
    /// Prepare a sampler whose weight cache covers levels below `levels`.
    pub fn new(params: &ModelParams, levels: u64) -> Result<Self> {
        params.validate()?;
        let spec = &params.lambda;
        let beta = spec.beta.map(BetaJumps::new).transpose()?;
        let atoms: Vec<Atom> = spec.atoms.iter().copied().filter(|a| a.r < 1.0).collect();
        let explosive = spec.atoms.iter().filter(|a| a.r == 1.0).map(|a| a.weight).sum();
        let stride = 3 + atoms.len();
        let mut s = Self {
            params: params.clone(),
            beta,
            atoms,
            explosive,
            table: Vec::new(),
            table_levels: 0,
            stride,
            kingman_tail: None,
        };
        let table_levels = levels.min(RATE_TABLE_LIMIT);
        let mut table = Vec::with_capacity(table_levels as usize * stride);
        let mut row = vec![0.0; stride];
        for n in 0..table_levels {
            s.weights_into(n, &mut row);
            table.extend_from_slice(&row);
        }
        s.table = table;
        s.table_levels = table_levels;
        Ok(s)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn is_pure_kingman(&self) -> bool {
        let l = &self.params.lambda;
        l.kingman_mass > 0.0 && l.beta.is_none() && l.atoms.is_empty()
    }

    fn weights_into(&self, n: u64, row: &mut [f64]) {
        let p = &self.params;
        let mut acc = p.lambda.kingman_mass * binomial(n + 1, 2) + p.theta * (n + 1) as f64;
        row[0] = acc;
        if let Some(b) = &self.beta {
            acc += b.component.scale * b.component.level_factor(n) / b.component.alpha;
        }
        row[1] = acc;
        for (i, a) in self.atoms.iter().enumerate() {
            acc += a.total_merger_rate(n + 1);
            row[2 + i] = acc;
        }
        if n >= 1 {
            acc += self.explosive;
        }
        row[self.stride - 1] = acc;
    }

    /// Total rate of leaving level `n`.
    pub fn total_rate(&self, n: u64) -> f64 {
        if n < self.table_levels {
            self.table[(n as usize + 1) * self.stride - 1]
        } else {
            total_up_rate(&self.params, n)
        }
    }

    fn pick_component<R: Rng + ?Sized>(&self, n: u64, total: f64, rng: &mut R) -> Component {
        let u = rng.random::<f64>() * total;
        let mut scratch;
        let row: &[f64] = if n < self.table_levels {
            let start = n as usize * self.stride;
            &self.table[start..start + self.stride]
        } else {
            scratch = vec![0.0; self.stride];
            self.weights_into(n, &mut scratch);
            &scratch
        };
        if u < row[0] {
            return Component::Single;
        }
        if u < row[1] {
            return Component::Beta;
        }
        for i in 0..self.atoms.len() {
            if u < row[2 + i] {
                return Component::Atom(i);
            }
        }
        if self.explosive > 0.0 {
            Component::Explosive
        } else {
            // Rounding at the top of the cumulative row.
            self.last_positive_component(row)
        }
    }

    fn last_positive_component(&self, row: &[f64]) -> Component {
        for i in (0..self.atoms.len()).rev() {
            let below = if i == 0 { row[1] } else { row[1 + i] };
            if row[2 + i] > below {
                return Component::Atom(i);
            }
        }
        if row[1] > row[0] {
            Component::Beta
        } else {
            Component::Single
        }
    }

    /// One jump from level `n`: holding time and new level, the latter capped at `cap`.
    /// `None` if the line can never leave `n`.
    pub fn step<R: Rng + ?Sized>(&self, n: u64, cap: u64, rng: &mut R) -> Option<(f64, u64)> {
        let total = self.total_rate(n);
        if total <= 0.0 {
            return None;
        }
        let dt = rng.sample::<f64, _>(Exp1) / total;
        let room = cap.saturating_sub(n).max(1);
        let l = match self.pick_component(n, total, rng) {
            Component::Single => 1,
            Component::Beta => self.beta.as_ref().expect("beta component").sample(rng, room),
            Component::Atom(i) => sample_conditioned_negbin(rng, n, self.atoms[i].r).saturating_sub(1),
            Component::Explosive => room,
        };
        Some((dt, n.saturating_add(l).min(cap)))
    }

    /// A path of `F^k` stopped at the first level `≥ cap`.
    pub fn simulate_path<R: Rng + ?Sized>(&self, k: u64, cap: u64, rng: &mut R) -> Result<FixationLinePath> {
        if cap <= k {
            return Err(domain!("truncation level {cap} must exceed the start level {k}"));
        }
        let mut path = FixationLinePath { start_level: k, jumps: Vec::new(), truncation_level: cap };
        let (mut t, mut n) = (0.0, k);
        while n < cap {
            match self.step(n, cap, rng) {
                Some((dt, next)) => {
                    t += dt;
                    n = next;
                    path.jumps.push((t, n));
                }
                None => break,
            }
        }
        Ok(path)
    }

    /// Time for `F^k` to reach `cap`, without storing the path.
    pub fn hitting_time<R: Rng + ?Sized>(&self, k: u64, cap: u64, rng: &mut R) -> f64 {
        let (mut t, mut n) = (0.0, k);
        while n < cap {
            match self.step(n, cap, rng) {
                Some((dt, next)) => {
                    t += dt;
                    n = next;
                }
                None => return f64::INFINITY,
            }
        }
        t
    }

    /// Upper bound on `Σ_{n ≥ cap} 1 / total_up_rate(n)`, which bounds the
    /// expected time from the first level `≥ cap` to explosion.
    pub fn tail_bound(&self, cap: u64) -> f64 {
        let spec = &self.params.lambda;
        let mut bound = f64::INFINITY;
        if spec.kingman_mass > 0.0 && cap > 0 {
            bound = bound.min(2.0 / (spec.kingman_mass * cap as f64));
        }
        if let Some(b) = &spec.beta {
            bound = bound.min(beta_tail_sum(b, cap.max(1)));
        }
        bound
    }

    /// A sample of `I^k(∞)`. For a pure Kingman measure the explosion time is
    /// sampled in full and `cap` is ignored; otherwise the line is run to `cap`.
    pub fn sample_explosion<R: Rng + ?Sized>(&mut self, k: u64, cap: u64, rng: &mut R) -> Result<ExplosionSample> {
        self.prepare_explosion(k)?;
        self.sample_explosion_prepared(k, cap, rng)
    }

    /// Precompute what [`Self::sample_explosion_prepared`] needs for start level `k`.
    pub fn prepare_explosion(&mut self, k: u64) -> Result<()> {
        if !self.params.lambda.comes_down_from_infinity() {
            return Err(Error::Unsupported("the measure does not come down from infinity".into()));
        }
        if self.is_pure_kingman() {
            if k == 0 && self.params.theta == 0.0 {
                return Err(Error::Unsupported("F^0 never leaves level 0 without mutation".into()));
            }
            let from = k.max(1) + KINGMAN_EXPLICIT_TERMS;
            if self.kingman_tail.is_none_or(|t| t.from != from) {
                self.kingman_tail = Some(kingman_tail(self.params.lambda.kingman_mass, self.params.theta, from));
            }
        }
        Ok(())
    }

    /// Like [`Self::sample_explosion`] but usable through a shared reference
    /// once [`Self::prepare_explosion`] has been called for `k`.
    pub fn sample_explosion_prepared<R: Rng + ?Sized>(&self, k: u64, cap: u64, rng: &mut R) -> Result<ExplosionSample> {
        if !self.params.lambda.comes_down_from_infinity() {
            return Err(Error::Unsupported("the measure does not come down from infinity".into()));
        }
        if self.is_pure_kingman() {
            let tail = self
                .kingman_tail
                .filter(|t| t.from == k.max(1) + KINGMAN_EXPLICIT_TERMS)
                .ok_or_else(|| Error::Invalid(format!("explosion sampler not prepared for level {k}")))?;
            let c = self.params.lambda.kingman_mass;
            let theta = self.params.theta;
            let mut elapsed = 0.0;
            for n in k..tail.from {
                let rate = (n + 1) as f64 * (c * n as f64 / 2.0 + theta);
                elapsed += rng.sample::<f64, _>(Exp1) / rate;
            }
            let shape = tail.mean * tail.mean / tail.variance;
            let scale = tail.variance / tail.mean;
            let g = Gamma::new(shape, scale).map_err(|e| Error::Numeric(format!("tail gamma: {e}")))?;
            elapsed += g.sample(rng);
            return Ok(ExplosionSample { elapsed, tail_bound: 0.0, exact: true });
        }
        if cap <= k {
            return Err(domain!("truncation level {cap} must exceed the start level {k}"));
        }
        let elapsed = self.hitting_time(k, cap, rng);
        Ok(ExplosionSample { elapsed, tail_bound: self.tail_bound(cap), exact: false })
    }

    /// Levels visited by `F^k` before reaching `cap`.
    pub fn range_indicator<R: Rng + ?Sized>(&self, k: u64, cap: u64, rng: &mut R) -> Result<BTreeSet<u64>> {
        Ok(self.simulate_path(k, cap, rng)?.visited_levels())
    }

    /// Smallest `M = 1000·2^j` with `tail_bound(M) < 1e−3 · Σ_{k ≤ n < M} 1/total_up_rate(n)`,
    /// capped at about `10^8`.
    pub fn default_truncation(&self, k: u64) -> u64 {
        let mut cap = 1000u64.max(k + 1);
        let mut mean: f64 = (k..cap).map(|n| 1.0 / self.total_rate(n)).filter(|v| v.is_finite()).sum();
        while cap < 100_000_000 && self.tail_bound(cap) >= 1e-3 * mean {
            let next = cap * 2;
            mean += (cap..next).map(|n| 1.0 / total_up_rate(&self.params, n)).sum::<f64>();
            cap = next;
        }
        cap
    }
}

/// `Σ_{n ≥ m} 1/Λ_{n+1}` for a scaled Beta component:
/// `α Γ(α) Γ(m) / ((α − 1) Γ(m + α − 1)) / scale`.
fn beta_tail_sum(b: &BetaComponent, m: u64) -> f64 {
    let a = b.alpha;
    (a.ln() + ln_gamma(a) - ln_gamma_ratio(m as f64, a - 1.0)).exp() / ((a - 1.0) * b.scale)
}

/// Mean and variance of `Σ_{n ≥ from} E_n` with `E_n ~ Exp((n+1)(c n/2 + θ))`.
fn kingman_tail(c: f64, theta: f64, from: u64) -> KingmanTail {
    let l = from as f64;
    if theta == 0.0 {
        let variance = 4.0 / (c * c) * (trigamma(l) + trigamma(l + 1.0) - 2.0 / l);
        return KingmanTail { from, mean: 2.0 / (c * l), variance };
    }
    let upto = from + KINGMAN_TAIL_TERMS;
    let mut mean = 0.0;
    let mut variance = 0.0;
    for n in (from..upto).rev() {
        let rate = (n + 1) as f64 * (c * n as f64 / 2.0 + theta);
        mean += 1.0 / rate;
        variance += 1.0 / (rate * rate);
    }
    // Midpoint-rule remainder of (2/c) Σ 1/((n+1)(n+a)), a = 2θ/c.
    let a = 2.0 * theta / c;
    let b = upto as f64 - 0.5;
    mean += 2.0 / c / (b + 1.0) * ln_1p_over((a - 1.0) / (b + 1.0));
    variance += 4.0 / (3.0 * c * c * b.powi(3));
    KingmanTail { from, mean, variance }
}

/// Convenience wrapper around [`FixationLineSampler::simulate_path`].
pub fn simulate_path<R: Rng + ?Sized>(params: &ModelParams, k: u64, cap: u64, rng: &mut R) -> Result<FixationLinePath> {
    FixationLineSampler::new(params, cap)?.simulate_path(k, cap, rng)
}

/// Convenience wrapper around [`FixationLineSampler::sample_explosion`].
pub fn sample_explosion<R: Rng + ?Sized>(params: &ModelParams, k: u64, cap: u64, rng: &mut R) -> Result<ExplosionSample> {
    FixationLineSampler::new(params, cap)?.sample_explosion(k, cap, rng)
}

/// `I^k(n)` of a path.
pub fn inverse_time(path: &FixationLinePath, n: u64) -> Result<f64> {
    path.inverse_time(n)
}

/// Levels visited by `F^k` up to `cap`.
pub fn range_indicator<R: Rng + ?Sized>(params: &ModelParams, k: u64, cap: u64, rng: &mut R) -> Result<BTreeSet<u64>> {
    FixationLineSampler::new(params, cap)?.range_indicator(k, cap, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::LambdaSpec;
    use crate::rng::StreamSeed;
    use approx::assert_relative_eq;

    fn kingman(c: f64, theta: f64) -> ModelParams {
        ModelParams::new(1, LambdaSpec::kingman(c).unwrap(), theta, vec![0.5]).unwrap()
    }

    #[test]
    fn inverse_time_examples() {
        let path = FixationLinePath { start_level: 3, jumps: vec![(1.7, 5)], truncation_level: 10 };
        assert_eq!(path.inverse_time(3).unwrap(), 0.0);
        assert_eq!(path.inverse_time(4).unwrap(), 1.7);
        assert_eq!(path.inverse_time(6).unwrap(), f64::INFINITY);
        assert!(path.inverse_time(11).is_err());
        assert_eq!(path.level_at(1.0), 3);
        assert_eq!(path.level_at(2.0), 5);
    }

    #[test]
    fn zero_measure_never_jumps() {
        let p = ModelParams::neutral(1, LambdaSpec::default()).unwrap();
        let path = simulate_path(&p, 2, 50, &mut StreamSeed::new(1, "zero").rng(0)).unwrap();
        assert!(path.jumps.is_empty());
        assert!(simulate_path(&p, 5, 5, &mut StreamSeed::new(1, "zero").rng(0)).is_err());
    }

    #[test]
    fn kingman_jumps_are_unit() {
        let p = kingman(1.0, 0.0);
        let path = simulate_path(&p, 1, 40, &mut StreamSeed::new(2, "unit").rng(0)).unwrap();
        let levels: Vec<u64> = path.jumps.iter().map(|j| j.1).collect();
        assert_eq!(levels, (2..=40).collect::<Vec<_>>());
        let visited = path.visited_levels();
        assert_eq!(visited, (1..=40).collect());
    }

    #[test]
    fn beta_tail_sampler_matches_survival() {
        let b = BetaComponent::new(1.5, 1.0).unwrap();
        let jumps = BetaJumps::new(b).unwrap();
        let mut rng = StreamSeed::new(3, "tail").rng(0);
        let n = 200_000;
        let mut above_table = 0u64;
        let mut above_1e5 = 0u64;
        for _ in 0..n {
            let l = jumps.sample(&mut rng, u64::MAX);
            if l > BETA_TABLE_LEN {
                above_table += 1;
            }
            if l > 100_000 {
                above_1e5 += 1;
            }
        }
        let p1 = b.jump_survival(BETA_TABLE_LEN);
        let p2 = b.jump_survival(100_000);
        let se1 = (p1 * (1.0 - p1) / n as f64).sqrt();
        let se2 = (p2 * (1.0 - p2) / n as f64).sqrt();
        assert!((above_table as f64 / n as f64 - p1).abs() < 4.0 * se1);
        assert!((above_1e5 as f64 / n as f64 - p2).abs() < 4.0 * se2);
    }

    #[test]
    fn negbin_sampler_mean() {
        // Conditioned mean from the explicit pmf.
        for &(n, r) in &[(3u64, 0.2), (5, 0.7), (50, 0.01)] {
            let pmf = |m: u64| (ln_gamma((m + n) as f64) - ln_gamma(m as f64 + 1.0) - ln_gamma(n as f64)
                + m as f64 * f64::ln(r) + n as f64 * f64::ln(1.0 - r)).exp();
            let z: f64 = (2..2000).map(pmf).sum();
            let mean: f64 = (2..2000).map(|m| m as f64 * pmf(m)).sum::<f64>() / z;
            let var: f64 = (2..2000).map(|m| (m as f64 - mean).powi(2) * pmf(m)).sum::<f64>() / z;
            let mut rng = StreamSeed::new(4, "negbin").rng(n);
            let reps = 40_000;
            let s: f64 = (0..reps).map(|_| sample_conditioned_negbin(&mut rng, n, r) as f64).sum();
            let se = (var / reps as f64).sqrt();
            assert!((s / reps as f64 - mean).abs() < 4.0 * se, "n={n} r={r}");
        }
    }

    #[test]
    fn kingman_tail_moments() {
        // Direct summation against the closed forms.
        let direct = |c: f64, theta: f64, from: u64| {
            let mut m = 0.0;
            let mut v = 0.0;
            for n in (from..from + 20_000_000).rev() {
                let rate = (n + 1) as f64 * (c * n as f64 / 2.0 + theta);
                m += 1.0 / rate;
                v += 1.0 / (rate * rate);
            }
            (m, v)
        };
        let t = kingman_tail(2.0, 0.0, 300);
        let (m, v) = direct(2.0, 0.0, 300);
        assert_relative_eq!(t.mean, m + 1.0 / 20_000_300.0, max_relative = 1e-9);
        assert_relative_eq!(t.variance, v, max_relative = 1e-9);
        let t = kingman_tail(1.0, 0.7, 300);
        let (m, _) = direct(1.0, 0.7, 300);
        assert!(t.mean > m && t.mean < m + 2.0 / 20_000_300.0);
    }

    #[test]
    fn explosion_requires_coming_down() {
        let p = ModelParams::neutral(1, LambdaSpec::default().with_atom(0.5, 1.0).unwrap()).unwrap();
        let err = sample_explosion(&p, 1, 100, &mut StreamSeed::new(1, "x").rng(0)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        let k = kingman(1.0, 0.0);
        let err = sample_explosion(&k, 0, 100, &mut StreamSeed::new(1, "x").rng(0)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn explosive_atom_jumps_to_cap() {
        let spec = LambdaSpec::beta(1.5).unwrap().with_atom(1.0, 50.0).unwrap();
        let p = ModelParams::neutral(1, spec).unwrap();
        let s = FixationLineSampler::new(&p, 1000).unwrap();
        let mut rng = StreamSeed::new(5, "boom").rng(0);
        let path = s.simulate_path(1, 1000, &mut rng).unwrap();
        assert_eq!(path.final_level(), 1000);
        assert!(path.jumps.len() < 20);
    }

    #[test]
    fn beta_tail_bound_formula() {
        let b = BetaComponent::new(1.5, 1.0).unwrap();
        let direct: f64 = (100..10_000_000u64).map(|n| 1.0 / b.total_merger_rate(n + 1)).sum();
        let rest = beta_tail_sum(&b, 10_000_000);
        assert_relative_eq!(beta_tail_sum(&b, 100), direct + rest, max_relative = 1e-10);
        assert_relative_eq!(beta_tail_sum(&b, 1), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn default_truncation_rule() {
        let p = kingman(1.0, 0.0);
        let s = FixationLineSampler::new(&p, 10).unwrap();
        let m = s.default_truncation(1);
        assert!(s.tail_bound(m) < 1e-3 * 2.0);
        assert!(m >= 1000);
    }
}
