//! Monte Carlo estimators and formula-versus-simulation reports.
//!
//! Every replicate draws from streams keyed by `(seed, replicate index)` and
//! results are aggregated in index order, so estimates do not depend on the
//! worker count.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;

use crate::closed_forms::{mean_fixation_beta, mean_fixation_kingman, stationary_time_mean};
use crate::error::{domain, Error, Result};
use crate::fixation_line::FixationLineSampler;
use crate::lambda::{total_up_rate, ModelParams, SimplexPoint};
use crate::lookdown::{coupon_level_v, coupon_levels, draw_marks, event_stream, mark_stream, type_of, Lookdown, LookdownOptions};
use crate::parallel::{try_replicate_map, Execution};
use crate::quadrature::QuadratureConfig;
use crate::rng::StreamSeed;
use crate::special::CompensatedSum;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub ci95: (f64, f64),
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64, n: u64) -> Self {
        Self { mean, stderr, n, ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr) }
    }

    /// Mean and `sd/√n` of `samples` (sample variance with `n − 1`).
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::new(f64::NAN, f64::NAN, 0);
        }
        let mean = samples.iter().copied().collect::<CompensatedSum>().value() / n as f64;
        if n == 1 {
            return Self::new(mean, 0.0, 1);
        }
        let ss = samples.iter().map(|&v| (v - mean) * (v - mean)).collect::<CompensatedSum>().value();
        Self::new(mean, (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt(), n as u64)
    }

    /// A proportion `hits / n` with the binomial standard error.
    pub fn proportion(hits: u64, n: u64) -> Self {
        if n == 0 {
            return Self::new(f64::NAN, f64::NAN, 0);
        }
        let p = hits as f64 / n as f64;
        Self::new(p, (p * (1.0 - p) / n as f64).sqrt(), n)
    }

    /// `(mean − value) / stderr`.
    pub fn z_score(&self, value: f64) -> f64 {
        z_from(self.mean - value, self.stderr, 0.0)
    }
}

fn z_from(diff: f64, stderr: f64, tolerance: f64) -> f64 {
    let excess = (diff.abs() - tolerance).max(0.0).copysign(diff);
    if excess == 0.0 {
        0.0
    } else if stderr > 0.0 {
        excess / stderr
    } else {
        f64::INFINITY.copysign(excess)
    }
}

/// One formula-versus-estimate comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub experiment: String,
    pub label: String,
    pub formula_value: f64,
    pub estimate: Estimate,
    /// Standard error of the reference value; zero when it is a formula.
    pub reference_stderr: f64,
    /// Deterministic slack (a truncation bias bound) removed from `|diff|` before scaling.
    pub tolerance: f64,
    pub z_score: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn against_formula(experiment: &str, label: &str, formula: f64, estimate: Estimate, threshold: f64) -> Self {
        Self::build(experiment, label, formula, 0.0, estimate, 0.0, threshold)
    }

    /// As [`Self::against_formula`], with a known bias bound added to the tolerance.
    pub fn with_tolerance(experiment: &str, label: &str, formula: f64, estimate: Estimate, tolerance: f64, threshold: f64) -> Self {
        Self::build(experiment, label, formula, 0.0, estimate, tolerance, threshold)
    }

    /// Two independent estimates; `reference` takes the formula column.
    pub fn two_sample(experiment: &str, label: &str, reference: Estimate, estimate: Estimate, threshold: f64) -> Self {
        Self::build(experiment, label, reference.mean, reference.stderr, estimate, 0.0, threshold)
    }

    fn build(experiment: &str, label: &str, formula: f64, ref_se: f64, estimate: Estimate, tolerance: f64, threshold: f64) -> Self {
        let se = (estimate.stderr.powi(2) + ref_se.powi(2)).sqrt();
        let z = z_from(estimate.mean - formula, se, tolerance);
        Self {
            experiment: experiment.to_string(),
            label: label.to_string(),
            formula_value: formula,
            estimate,
            reference_stderr: ref_se,
            tolerance,
            z_score: z,
            threshold,
            pass: z.abs() <= threshold,
        }
    }

    /// Combined standard error used for `z_score`.
    pub fn stderr(&self) -> f64 {
        (self.estimate.stderr.powi(2) + self.reference_stderr.powi(2)).sqrt()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const REPORT_HEADER: &str = "experiment,label,formula,estimate,stderr,z,pass";

/// Write reports as `experiment,label,formula,estimate,stderr,z,pass`.
pub fn write_report_csv<W: Write>(reports: &[ComparisonReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&r.experiment),
            csv_field(&r.label),
            r.formula_value,
            r.estimate.mean,
            r.stderr(),
            r.z_score,
            r.pass
        )?;
    }
    Ok(())
}

/// An estimate of a time that was truncated at a finite level: the true mean
/// lies in `bias_bracket` shifted by sampling error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedEstimate {
    pub estimate: Estimate,
    pub bias_bracket: (f64, f64),
    /// Truncation level used, `None` when every sample was exact.
    pub truncation: Option<u64>,
}

impl TruncatedEstimate {
    /// Upper bound on the mean time missing from each sample.
    pub fn bias_bound(&self) -> f64 {
        self.bias_bracket.1 - self.bias_bracket.0
    }
}

fn is_pure_kingman(params: &ModelParams) -> bool {
    params.lambda.beta.is_none() && params.lambda.atoms.is_empty()
}

fn require_comes_down(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if !params.lambda.comes_down_from_infinity() {
        return Err(Error::Unsupported("the measure does not come down from infinity".into()));
    }
    Ok(())
}

/// Samplers prepared for each start level that occurs.
struct ExplosionSamplers {
    base: FixationLineSampler,
    per_level: BTreeMap<u64, FixationLineSampler>,
    cap: u64,
}

impl ExplosionSamplers {
    fn new(params: &ModelParams, cap: Option<u64>, levels: impl IntoIterator<Item = u64>) -> Result<Self> {
        let pure = is_pure_kingman(params);
        let levels: Vec<u64> = levels.into_iter().collect();
        let min_level = levels.iter().copied().min().unwrap_or(1);
        let cap = match cap {
            Some(c) => c,
            None if pure => 0,
            None => FixationLineSampler::new(params, 1 << 12)?.default_truncation(min_level.max(1)),
        };
        let mut base = FixationLineSampler::new(params, cap.max(2))?;
        let mut per_level = BTreeMap::new();
        for level in levels {
            if pure {
                if let std::collections::btree_map::Entry::Vacant(e) = per_level.entry(level) {
                    let mut s = base.clone();
                    s.prepare_explosion(level)?;
                    e.insert(s);
                }
            } else {
                base.prepare_explosion(level)?;
            }
        }
        Ok(Self { base, per_level, cap })
    }

    fn sample<R: Rng + ?Sized>(&self, level: u64, rng: &mut R) -> Result<(f64, f64, bool)> {
        let sampler = self.per_level.get(&level).unwrap_or(&self.base);
        let s = sampler.sample_explosion_prepared(level, self.cap, rng)?;
        Ok((s.elapsed, s.tail_bound, s.exact))
    }
}

fn truncated(samples: Vec<(f64, f64, bool)>, cap: u64) -> TruncatedEstimate {
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let estimate = Estimate::from_samples(&values);
    let n = samples.len().max(1) as f64;
    let bias = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let all_exact = samples.iter().all(|s| s.2);
    TruncatedEstimate {
        estimate,
        bias_bracket: (estimate.mean, estimate.mean + bias),
        truncation: (!all_exact).then_some(cap),
    }
}

/// i.i.d. samples of `I^k(∞)`, truncated at `cap` unless the measure is pure Kingman.
pub fn estimate_explosion_time(
    params: &ModelParams,
    k: u64,
    replicates: u64,
    cap: Option<u64>,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<TruncatedEstimate> {
    let (samples, cap) = explosion_samples_with_cap(params, k, replicates, cap, seed, exec)?;
    Ok(truncated(samples, cap))
}

/// Raw samples of `I^k(∞)` as `(elapsed, tail_bound, exact)`.
pub fn explosion_samples(
    params: &ModelParams,
    k: u64,
    replicates: u64,
    cap: Option<u64>,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<Vec<(f64, f64, bool)>> {
    explosion_samples_with_cap(params, k, replicates, cap, seed, exec).map(|r| r.0)
}

fn explosion_samples_with_cap(
    params: &ModelParams,
    k: u64,
    replicates: u64,
    cap: Option<u64>,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<(Vec<(f64, f64, bool)>, u64)> {
    require_comes_down(params)?;
    let samplers = ExplosionSamplers::new(params, cap, [k])?;
    let samples = try_replicate_map(replicates, exec, |i| samplers.sample(k, &mut seed.rng(i)))?;
    Ok((samples, samplers.cap))
}

/// i.i.d. samples of `T^x_fix,k = I^{V^x_k − 1}(∞)`: `V` from fresh level marks,
/// then an independent explosion from level `V − 1`. Zero when fewer than
/// `k + 1` types are present.
pub fn estimate_fixation_time(
    params: &ModelParams,
    x: &SimplexPoint,
    k: usize,
    replicates: u64,
    cap: Option<u64>,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<TruncatedEstimate> {
    require_comes_down(params)?;
    if params.theta != 0.0 {
        return Err(domain!("fixation times need theta = 0"));
    }
    if x.d() != params.d {
        return Err(domain!("x has dimension {}, expected {}", x.d(), params.d));
    }
    if k == 0 || k > x.d() + 1 {
        return Err(domain!("k must lie in [1, {}], got {k}", x.d() + 1));
    }
    let coupons = seed.derive("coupon");
    let levels: Vec<Option<u64>> = try_replicate_map(replicates, exec, |i| coupon_level_v(x, &mut coupons.rng(i), k))?;
    let distinct: std::collections::BTreeSet<u64> = levels.iter().flatten().map(|v| v - 1).collect();
    let samplers = ExplosionSamplers::new(params, cap, distinct)?;
    let explosions = seed.derive("explosion");
    let samples = try_replicate_map(replicates, exec, |i| match levels[i as usize] {
        None => Ok((0.0, 0.0, true)),
        Some(v) => samplers.sample(v - 1, &mut explosions.rng(i)),
    })?;
    Ok(truncated(samples, samplers.cap))
}

/// Raw samples of `T^x_fix,k`, as used by [`estimate_fixation_time`].
pub fn fixation_time_samples(
    params: &ModelParams,
    x: &SimplexPoint,
    k: usize,
    replicates: u64,
    cap: Option<u64>,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<Vec<f64>> {
    require_comes_down(params)?;
    if params.theta != 0.0 {
        return Err(domain!("fixation times need theta = 0"));
    }
    let coupons = seed.derive("coupon");
    let levels: Vec<Option<u64>> = try_replicate_map(replicates, exec, |i| coupon_level_v(x, &mut coupons.rng(i), k))?;
    let distinct: std::collections::BTreeSet<u64> = levels.iter().flatten().map(|v| v - 1).collect();
    let samplers = ExplosionSamplers::new(params, cap, distinct)?;
    let explosions = seed.derive("explosion");
    try_replicate_map(replicates, exec, |i| match levels[i as usize] {
        None => Ok(0.0),
        Some(v) => samplers.sample(v - 1, &mut explosions.rng(i)).map(|s| s.0),
    })
}

/// Empirical characteristic function: estimates of `E[cos tT]` and `E[sin tT]`.
pub fn empirical_charfunc(samples: &[f64], t: f64) -> (Estimate, Estimate) {
    let re: Vec<f64> = samples.iter().map(|&s| (t * s).cos()).collect();
    let im: Vec<f64> = samples.iter().map(|&s| (t * s).sin()).collect();
    (Estimate::from_samples(&re), Estimate::from_samples(&im))
}

/// Empirical distribution of loss orders `(i_1, …, i_{d+1})`, `i_1` the last survivor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrderDistribution {
    pub counts: BTreeMap<Vec<usize>, u64>,
    pub n: u64,
    /// Runs in which two types were lost in the same event (excluded from `counts`).
    pub ties: u64,
    /// Runs that did not lose all but one type before the horizon (excluded).
    pub unresolved: u64,
}

impl OrderDistribution {
    fn from_orders(orders: Vec<OrderOutcome>) -> Self {
        let mut dist = OrderDistribution::default();
        for o in orders {
            match o {
                OrderOutcome::Order(order) => {
                    *dist.counts.entry(order).or_default() += 1;
                    dist.n += 1;
                }
                OrderOutcome::Tie => dist.ties += 1,
                OrderOutcome::Unresolved => dist.unresolved += 1,
            }
        }
        dist
    }

    /// Estimated probability of `order`.
    pub fn probability(&self, order: &[usize]) -> Estimate {
        Estimate::proportion(self.counts.get(order).copied().unwrap_or(0), self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum OrderOutcome {
    Order(Vec<usize>),
    Tie,
    Unresolved,
}

/// Loss orders read off the first-appearance levels `m^x`: types are lost in
/// decreasing order of `m^x`. Types with zero frequency are lost first.
pub fn estimate_disappearance_order(
    params: &ModelParams,
    x: &SimplexPoint,
    replicates: u64,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<OrderDistribution> {
    params.validate()?;
    if params.theta != 0.0 {
        return Err(domain!("disappearance orders need theta = 0"));
    }
    let marks = seed.derive("coupon");
    let orders = try_replicate_map(replicates, exec, |i| {
        let c = coupon_levels(x, None, &mut marks.rng(i), x.d())?;
        let mut types: Vec<usize> = (1..=x.d() + 1).collect();
        types.sort_by_key(|&t| c.m[t - 1].unwrap_or(u64::MAX));
        Ok(OrderOutcome::Order(types))
    })?;
    Ok(OrderDistribution::from_orders(orders))
}

/// Loss orders from full lookdown runs with `n_levels` levels, up to `horizon`.
pub fn estimate_disappearance_order_lookdown(
    params: &ModelParams,
    x: &SimplexPoint,
    n_levels: usize,
    horizon: f64,
    replicates: u64,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<OrderDistribution> {
    params.validate()?;
    if params.theta != 0.0 {
        return Err(domain!("disappearance orders need theta = 0"));
    }
    let ics = [x.clone()];
    let orders = try_replicate_map(replicates, exec, |i| {
        let mut sim = Lookdown::from_seed(params, n_levels, &ics, seed, i, LookdownOptions::default())?;
        let types = x.d() + 1;
        let mut lost: Vec<usize> = (1..=types).filter(|&t| sim.state().type_counts(0)[t - 1] == 0).collect();
        let mut tie = false;
        while lost.len() + 1 < types {
            if sim.step_until(horizon).is_none() {
                return Ok(OrderOutcome::Unresolved);
            }
            let counts = sim.state().type_counts(0);
            let newly: Vec<usize> = (1..=types).filter(|&t| counts[t - 1] == 0 && !lost.contains(&t)).collect();
            if newly.len() > 1 {
                tie = true;
            }
            lost.extend(newly);
        }
        if tie {
            return Ok(OrderOutcome::Tie);
        }
        let survivor = (1..=types).find(|t| !lost.contains(t)).expect("one type survives");
        let mut order = vec![survivor];
        order.extend(lost.iter().rev());
        Ok(OrderOutcome::Order(order))
    })?;
    Ok(OrderDistribution::from_orders(orders))
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// `sup_z (F_a(z) − F_b(z))` over the pooled sample points.
fn max_ecdf_gap(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let (mut plus, mut minus) = (0.0f64, 0.0f64);
    while i < a.len() || j < b.len() {
        let z = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= z {
            i += 1;
        }
        while j < b.len() && b[j] <= z {
            j += 1;
        }
        let gap = i as f64 / na - j as f64 / nb;
        plus = plus.max(gap);
        minus = minus.max(-gap);
    }
    (plus, minus)
}

/// Kolmogorov distribution tail `P(K > λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(domain!("both samples must be nonempty"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let (plus, minus) = max_ecdf_gap(&sa, &sb);
    let d = plus.max(minus);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_tail(lambda) })
}

/// One-sided test of `H0: a` is stochastically at least as large as `b`;
/// the statistic is `sup (F_a − F_b)`.
pub fn ks_one_sided(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(domain!("both samples must be nonempty"));
    }
    let (plus, _) = max_ecdf_gap(&sorted(a), &sorted(b));
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    Ok(KsResult { statistic: plus, p_value: (-2.0 * ne * plus * plus).exp().min(1.0) })
}

/// Diagnostics for the stationary time on a finite lookdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryDiagnostics {
    /// `X(1)` at the proxy time, runs below vs above the median proxy time.
    pub independence: KsResult,
    /// `X(1)` at the proxy time vs `X(1)` a further `2 × mean` later (disjoint halves of the runs).
    pub stationarity: KsResult,
    /// Mean of the finite-`N` proxy (time at which every level carries a mutant label).
    pub proxy_mean: Estimate,
    pub pairs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryEstimate {
    pub estimate: TruncatedEstimate,
    pub diagnostics: Option<StationaryDiagnostics>,
}

/// Samples `I⁰(∞)`; for a pure Kingman measure, also runs `pairs` lookdowns
/// with `n_levels` levels started from `x` for the diagnostics.
#[allow(clippy::too_many_arguments)]
pub fn estimate_stationary_time(
    params: &ModelParams,
    replicates: u64,
    cap: Option<u64>,
    diagnostics: Option<(&SimplexPoint, usize, u64)>,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<StationaryEstimate> {
    if !(params.theta > 0.0) {
        return Err(domain!("a stationary time needs theta > 0"));
    }
    let estimate = estimate_explosion_time(params, 0, replicates, cap, &seed.derive("explosion"), exec)?;
    let diagnostics = match diagnostics {
        Some((x, n, pairs)) if is_pure_kingman(params) => Some(stationary_diagnostics(params, x, n, pairs, &seed.derive("lookdown"), exec)?),
        _ => None,
    };
    Ok(StationaryEstimate { estimate, diagnostics })
}

/// Runs a lookdown until every level carries a mutant label (time `T`),
/// records `X(1)` at `T` and at `T + 2·E[I⁰(∞)]`.
pub fn stationary_diagnostics(
    params: &ModelParams,
    x: &SimplexPoint,
    n_levels: usize,
    pairs: u64,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<StationaryDiagnostics> {
    if !is_pure_kingman(params) || !(params.theta > 0.0) {
        return Err(Error::Unsupported("stationary diagnostics need a pure Kingman measure and theta > 0".into()));
    }
    if pairs < 4 {
        return Err(domain!("at least four runs are needed"));
    }
    let mean = stationary_time_mean(params.lambda.kingman_mass, params.theta)?.value;
    let ics = [x.clone()];
    let runs = try_replicate_map(pairs, exec, |i| {
        let options = LookdownOptions { record_events: false, tracked_lines: vec![0] };
        let mut sim = Lookdown::from_seed(params, n_levels, &ics, seed, i, options)?;
        while !sim.state().is_saturated(0) {
            sim.step().ok_or_else(|| Error::Numeric("lookdown stopped before saturation".into()))?;
        }
        let t = sim.state().time();
        let at = sim.state().frequencies(0).get(1);
        sim.advance_to(t + 2.0 * mean);
        let later = sim.state().frequencies(0).get(1);
        Ok((t, at, later))
    })?;
    let times: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let median = sorted(&times)[times.len() / 2];
    let below: Vec<f64> = runs.iter().filter(|r| r.0 < median).map(|r| r.1).collect();
    let above: Vec<f64> = runs.iter().filter(|r| r.0 >= median).map(|r| r.1).collect();
    let half = runs.len() / 2;
    let first: Vec<f64> = runs[..half].iter().map(|r| r.1).collect();
    let second: Vec<f64> = runs[half..].iter().map(|r| r.2).collect();
    Ok(StationaryDiagnostics {
        independence: ks_two_sample(&below, &above)?,
        stationarity: ks_two_sample(&first, &second)?,
        proxy_mean: Estimate::from_samples(&times),
        pairs,
    })
}

fn pattern_holds(types: impl Iterator<Item = usize>, n0: &[u32]) -> bool {
    let mut expected = n0.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i + 1, c as usize));
    types.zip(&mut expected).all(|(t, e)| t == e)
}

/// `E[(X_t^x)^n]` from lookdowns with `max(|n|, 2)` levels: the probability
/// that the first `n(1)` levels have type 1, the next `n(2)` type 2, and so on.
/// By exchangeability this equals the moment of the infinite system.
pub fn forward_moment(
    params: &ModelParams,
    x: &SimplexPoint,
    n0: &[u32],
    t: f64,
    replicates: u64,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<Estimate> {
    params.validate()?;
    if n0.len() != params.d || x.d() != params.d {
        return Err(domain!("n and x must have dimension d = {}", params.d));
    }
    if !(t >= 0.0) {
        return Err(domain!("time must be nonnegative, got {t}"));
    }
    let total: usize = n0.iter().map(|&c| c as usize).sum();
    let ics = [x.clone()];
    let hits = try_replicate_map(replicates, exec, |i| {
        let mut sim = Lookdown::from_seed(params, total.max(2), &ics, seed, i, LookdownOptions::default())?;
        sim.advance_to(t);
        let s = sim.state();
        let types = s.origins()[..total].iter().map(|&l| s.label_type(0, l));
        Ok(pattern_holds(types, n0) as u64 as f64)
    })?;
    Ok(Estimate::from_samples(&hits))
}

/// Per-run samples of `Π_i X^{x,N}_t(i)^{n(i)}` for several prefix sizes `N`
/// of one lookdown with `max(N)` levels, so estimates for different `N` are paired.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixMoments {
    pub levels: Vec<usize>,
    /// `samples[j][r]` is the value for `levels[j]` in run `r`.
    pub samples: Vec<Vec<f64>>,
}

impl PrefixMoments {
    pub fn estimate(&self, j: usize) -> Estimate {
        Estimate::from_samples(&self.samples[j])
    }

    /// `|mean_j − reference|` with its standard error.
    pub fn error(&self, j: usize, reference: f64) -> Estimate {
        let e = self.estimate(j);
        Estimate::new((e.mean - reference).abs(), e.stderr, e.n)
    }

    /// Paired estimate of `|mean_a − ref| − |mean_b − ref|` (delta method on signs).
    pub fn error_difference(&self, a: usize, b: usize, reference: f64) -> Estimate {
        let sa = (self.estimate(a).mean - reference).signum();
        let sb = (self.estimate(b).mean - reference).signum();
        let diffs: Vec<f64> = self.samples[a]
            .iter()
            .zip(&self.samples[b])
            .map(|(&u, &v)| sa * (u - reference) - sb * (v - reference))
            .collect();
        Estimate::from_samples(&diffs)
    }
}

pub fn prefix_moments(
    params: &ModelParams,
    x: &SimplexPoint,
    n0: &[u32],
    t: f64,
    levels: &[usize],
    replicates: u64,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<PrefixMoments> {
    params.validate()?;
    let n_max = levels.iter().copied().max().ok_or_else(|| domain!("no prefix sizes given"))?;
    if levels.contains(&0) || n0.len() != params.d {
        return Err(domain!("prefix sizes must be positive and n must have dimension d"));
    }
    let ics = [x.clone()];
    let rows = try_replicate_map(replicates, exec, |i| {
        let mut sim = Lookdown::from_seed(params, n_max.max(2), &ics, seed, i, LookdownOptions::default())?;
        sim.advance_to(t);
        Ok(levels
            .iter()
            .map(|&n| {
                let f = sim.state().prefix_frequencies(0, n);
                n0.iter().zip(&f).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()
            })
            .collect::<Vec<f64>>())
    })?;
    let samples = (0..levels.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    Ok(PrefixMoments { levels: levels.to_vec(), samples })
}

/// Forward moment from the lookdown against the dual chain, both by simulation.
#[allow(clippy::too_many_arguments)]
pub fn duality_check(
    params: &ModelParams,
    x: &SimplexPoint,
    n0: &[u32],
    t: f64,
    replicates: u64,
    seed: &StreamSeed,
    exec: Execution,
    threshold: f64,
) -> Result<ComparisonReport> {
    let total: u32 = n0.iter().sum();
    if total > 4 {
        return Err(domain!("|n| is limited to 4, got {total}"));
    }
    let forward = forward_moment(params, x, n0, t, replicates, &seed.derive("forward"), exec)?;
    let dual = crate::dual::dual_moment(
        params,
        x,
        &crate::dual::DualState::counts(n0),
        t,
        replicates,
        &seed.derive("dual"),
        exec,
    )?;
    let label = format!("x={:?} n={:?} t={t}", x.coords(), n0);
    Ok(ComparisonReport::two_sample("duality", &label, dual, forward, threshold))
}

/// One coupled run of two initial conditions on shared level marks and events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoalescenceRun {
    /// `D_{x,y}`, or `None` if the first `N` levels agree.
    pub d_xy: Option<u64>,
    /// First time the two frequency vectors coincide.
    pub coincidence_time: f64,
    /// First time `F^{D−1}` reaches `N`.
    pub saturation_time: f64,
}

pub fn coalescence_run(
    params: &ModelParams,
    x: &SimplexPoint,
    y: &SimplexPoint,
    n_levels: usize,
    seed: &StreamSeed,
    index: u64,
) -> Result<CoalescenceRun> {
    params.validate()?;
    let marks = draw_marks(&mut mark_stream(seed, index), n_levels);
    let d_xy = marks.iter().position(|&u| type_of(u, x) != type_of(u, y)).map(|p| p as u64 + 1);
    let Some(d) = d_xy else {
        return Ok(CoalescenceRun { d_xy, coincidence_time: 0.0, saturation_time: 0.0 });
    };
    if d == 1 {
        // Level 1 keeps its label forever, so the two systems never agree.
        return Ok(CoalescenceRun { d_xy, coincidence_time: f64::INFINITY, saturation_time: f64::INFINITY });
    }
    let line = d - 1;
    let options = LookdownOptions { record_events: false, tracked_lines: vec![line] };
    let mut sim = Lookdown::new(params, marks, &[x.clone(), y.clone()], event_stream(seed, index), options)?;
    let mut coincidence = None;
    let mut saturation = None;
    loop {
        let s = sim.state();
        if coincidence.is_none() && s.type_counts(0) == s.type_counts(1) {
            coincidence = Some(s.time());
        }
        if saturation.is_none() && s.is_saturated(line) {
            saturation = Some(s.time());
        }
        if let (Some(c), Some(f)) = (coincidence, saturation) {
            return Ok(CoalescenceRun { d_xy, coincidence_time: c, saturation_time: f });
        }
        sim.step().ok_or_else(|| Error::Numeric("lookdown stopped before coalescence".into()))?;
    }
}

/// Per-level jump-rate estimates of the fixation line embedded in a lookdown.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRates {
    pub level: u64,
    pub holding_time: f64,
    pub jumps: u64,
    pub rate: Estimate,
}

/// Runs `runs` lookdowns with `n_levels` levels, following `F^k` until it
/// exceeds `max_level`, and estimates the total jump rate out of each level.
pub fn fixation_line_rates(
    params: &ModelParams,
    k: u64,
    max_level: u64,
    n_levels: usize,
    runs: u64,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<Vec<LevelRates>> {
    params.validate()?;
    if max_level as usize >= n_levels {
        return Err(domain!("max_level must be below the number of levels"));
    }
    let x = SimplexPoint::vertex(params.d, 1)?;
    let ics = [x];
    let levels = (max_level + 1) as usize;
    let per_run = try_replicate_map(runs, exec, |i| {
        let mut sim = Lookdown::from_seed(params, n_levels, &ics, seed, i, LookdownOptions::default())?;
        let mut time = vec![0.0; levels];
        let mut jumps = vec![0u64; levels];
        let mut level = sim.state().fixation_level(k);
        let mut since = 0.0;
        while level <= max_level {
            let e = sim.step().ok_or_else(|| Error::Numeric("lookdown stopped".into()))?;
            let next = sim.state().fixation_level(k);
            if next != level {
                time[level as usize] += e.time - since;
                jumps[level as usize] += 1;
                since = e.time;
                level = next;
            }
        }
        Ok((time, jumps))
    })?;
    let mut out = Vec::new();
    for n in k.max(1)..=max_level {
        let holding: f64 = per_run.iter().map(|r| r.0[n as usize]).sum();
        let jumps: u64 = per_run.iter().map(|r| r.1[n as usize]).sum();
        let rate = if holding > 0.0 { jumps as f64 / holding } else { f64::NAN };
        let se = if holding > 0.0 { (jumps as f64).sqrt() / holding } else { f64::NAN };
        out.push(LevelRates { level: n, holding_time: holding, jumps, rate: Estimate::new(rate, se, jumps) });
    }
    Ok(out)
}

/// `total_up_rate` for comparison with [`fixation_line_rates`].
pub fn expected_level_rate(params: &ModelParams, n: u64) -> f64 {
    total_up_rate(params, n)
}

/// Mean fixation times over the lattice `x1 + x2 ≤ 1`, step `1/m`, for `d = 2`.
/// Supports a pure Kingman measure and a scaled Beta measure.
pub fn heatmap_grid(params: &ModelParams, k: usize, m: usize, quad: &QuadratureConfig) -> Result<Vec<(f64, f64, f64)>> {
    params.validate()?;
    if params.d != 2 {
        return Err(domain!("heatmaps need d = 2, got {}", params.d));
    }
    if params.theta != 0.0 {
        return Err(domain!("heatmaps need theta = 0"));
    }
    let spec = &params.lambda;
    let eval: Box<dyn Fn(&SimplexPoint, usize) -> Result<f64>> = match (spec.kingman_mass > 0.0, spec.beta, spec.atoms.is_empty()) {
        (true, None, true) => {
            let c = spec.kingman_mass;
            Box::new(move |x, k| Ok(mean_fixation_kingman(x, k, c)?.value))
        }
        (false, Some(b), true) => Box::new(move |x, k| Ok(mean_fixation_beta(x, k, b.alpha, quad)?.value / b.scale)),
        _ => return Err(Error::Unsupported("heatmaps support a pure Kingman or a pure Beta measure".into())),
    };
    crate::closed_forms::fixation_grid(m, k, eval)
}

pub const HEATMAP_HEADER: &str = "x1,x2,value";

pub fn write_heatmap_csv<W: Write>(rows: &[(f64, f64, f64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEATMAP_HEADER}")?;
    for (x1, x2, v) in rows {
        writeln!(out, "{x1},{x2},{v}")?;
    }
    Ok(())
}

/// Counts of sampled `V^x_k` values.
pub fn coupon_level_histogram(x: &SimplexPoint, k: usize, replicates: u64, seed: &StreamSeed, exec: Execution) -> Result<BTreeMap<u64, u64>> {
    let levels = try_replicate_map(replicates, exec, |i| coupon_level_v(x, &mut seed.rng(i), k))?;
    let mut hist = BTreeMap::new();
    for v in levels.into_iter().flatten() {
        *hist.entry(v).or_default() += 1;
    }
    Ok(hist)
}

/// Sample means for several values at once, used where reports share runs.
pub fn estimates_by_index(rows: &[Vec<f64>]) -> Vec<Estimate> {
    let width = rows.first().map_or(0, |r| r.len());
    (0..width).map(|j| Estimate::from_samples(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())).collect()
}
