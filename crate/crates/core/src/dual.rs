//! The ancestral dual `A^{(n)}` on `ℕ₀^d ∪ {†}` and the duality function
//! `H(x, n) = Π x(i)^{n(i)}`.
//!
//! From a state `n` with `|n|` lines:
//! - `n − (k−1) e_i` at rate `C(n(i), k) λ_{|n|,k}`, plus `c·C(n(i), 2)` for `k = 2`;
//! - `n − e_i` at rate `θ n(i) ν(i)`;
//! - `†` at rate `c Σ_{i<j} n(i) n(j) + Σ_k λ_{|n|,k} [C(|n|, k) − Σ_i C(n(i), k)] + θ Σ_i n(i)(1 − ν(i))`.
//!
//! Here `c = Λ({0})`. Lines of type `d + 1` are never tracked, so a merger
//! involving lines of different tracked types, or a mutation to a type other
//! than the line's own, kills the state.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{domain, Result};
use crate::estimation::Estimate;
use crate::lambda::{ModelParams, SimplexPoint};
use crate::parallel::{replicate_map, Execution};
use crate::rng::StreamSeed;
use crate::special::binomial;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DualState {
    Counts(Vec<u32>),
    Cemetery,
}

impl DualState {
    pub fn counts(n: &[u32]) -> Self {
        DualState::Counts(n.to_vec())
    }

    pub fn total(&self) -> Option<u64> {
        match self {
            DualState::Counts(n) => Some(n.iter().map(|&v| v as u64).sum()),
            DualState::Cemetery => None,
        }
    }
}

/// `H(x, n)`; zero at the cemetery.
pub fn duality_h(x: &SimplexPoint, state: &DualState) -> f64 {
    match state {
        DualState::Cemetery => 0.0,
        DualState::Counts(n) => n.iter().zip(x.coords()).map(|(&k, &xi)| xi.powi(k as i32)).product(),
    }
}

/// All transitions out of `state` with positive rate.
pub fn dual_rates(params: &ModelParams, state: &DualState) -> Result<Vec<(DualState, f64)>> {
    let n = match state {
        DualState::Cemetery => return Ok(Vec::new()),
        DualState::Counts(n) => n,
    };
    if n.len() != params.d {
        return Err(domain!("dual state has {} entries, expected d = {}", n.len(), params.d));
    }
    let total: u64 = n.iter().map(|&v| v as u64).sum();
    let c = params.lambda.kingman_mass;
    let lambda: Vec<f64> = (0..=total).map(|k| if k >= 2 { params.lambda.lambda_rate_unchecked(total, k) } else { 0.0 }).collect();
    let mut out = Vec::new();
    let mut kill = 0.0;
    for (i, &ni) in n.iter().enumerate() {
        let ni = ni as u64;
        for k in 2..=ni {
            let mut rate = binomial(ni, k) * lambda[k as usize];
            if k == 2 {
                rate += c * binomial(ni, 2);
            }
            if rate > 0.0 {
                let mut next = n.clone();
                next[i] -= (k - 1) as u32;
                out.push((DualState::Counts(next), rate));
            }
        }
        let mutate = params.theta * ni as f64 * params.nu[i];
        if mutate > 0.0 {
            let mut next = n.clone();
            next[i] -= 1;
            out.push((DualState::Counts(next), mutate));
        }
        kill += params.theta * ni as f64 * (1.0 - params.nu[i]);
    }
    for i in 0..n.len() {
        for j in i + 1..n.len() {
            kill += c * n[i] as f64 * n[j] as f64;
        }
    }
    for k in 2..=total {
        let same: f64 = n.iter().map(|&ni| binomial(ni as u64, k)).sum();
        kill += lambda[k as usize] * (binomial(total, k) - same);
    }
    if kill > 0.0 {
        out.push((DualState::Cemetery, kill));
    }
    Ok(out)
}

/// `c·C(|n|, 2) + Σ_k C(|n|, k) λ_{|n|,k} + θ|n|`.
pub fn total_outflow(params: &ModelParams, n: &[u32]) -> f64 {
    let total: u64 = n.iter().map(|&v| v as u64).sum();
    params.lambda.total_merger_rate(total) + params.theta * total as f64
}

/// `A^{(n0)}_t` by exact stepping.
pub fn simulate_dual<R: Rng + ?Sized>(params: &ModelParams, n0: &DualState, t: f64, rng: &mut R) -> Result<DualState> {
    if !(t >= 0.0) {
        return Err(domain!("time must be nonnegative, got {t}"));
    }
    let mut state = n0.clone();
    let mut now = 0.0;
    loop {
        let mut rates = dual_rates(params, &state)?;
        let total: f64 = rates.iter().map(|r| r.1).sum();
        if total <= 0.0 {
            return Ok(state);
        }
        now += rng.sample::<f64, _>(Exp1) / total;
        if now > t {
            return Ok(state);
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = rates.len() - 1;
        for (idx, (_, r)) in rates.iter().enumerate() {
            if u < *r {
                chosen = idx;
                break;
            }
            u -= r;
        }
        state = rates.swap_remove(chosen).0;
    }
}

/// Monte Carlo estimate of `E[H(x, A^{(n0)}_t)]`.
pub fn dual_moment(
    params: &ModelParams,
    x: &SimplexPoint,
    n0: &DualState,
    t: f64,
    replicates: u64,
    seed: &StreamSeed,
    exec: Execution,
) -> Result<Estimate> {
    if replicates == 0 {
        return Err(domain!("at least one replicate is required"));
    }
    let samples: Result<Vec<f64>> = replicate_map(replicates, exec, |i| {
        let mut rng = seed.rng(i);
        simulate_dual(params, n0, t, &mut rng).map(|s| duality_h(x, &s))
    })
    .into_iter()
    .collect();
    Ok(Estimate::from_samples(&samples?))
}

/// `E[H(x, A^{(n0)}_t)]` by uniformization on the finite set of states
/// reachable from `n0`. Accurate to about `1e−13`.
pub fn dual_moment_exact(params: &ModelParams, x: &SimplexPoint, n0: &DualState, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain!("time must be nonnegative, got {t}"));
    }
    if n0.total().is_some_and(|n| n > 12) {
        return Err(domain!("exact evaluation is limited to |n| <= 12"));
    }
    let mut index = HashMap::new();
    let mut states = vec![n0.clone()];
    index.insert(n0.clone(), 0usize);
    let mut rows = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut row = Vec::new();
        for (next, rate) in dual_rates(params, &states[i])? {
            let j = *index.entry(next.clone()).or_insert_with(|| {
                states.push(next);
                states.len() - 1
            });
            row.push((j, rate));
        }
        rows.push(row);
        i += 1;
    }
    let out: Vec<f64> = rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
    let q = out.iter().copied().fold(0.0, f64::max);
    let h: Vec<f64> = states.iter().map(|s| duality_h(x, s)).collect();
    if q == 0.0 || t == 0.0 {
        return Ok(h[0]);
    }
    // π_{k+1} = π_k (I + Q/q), weighted by Poisson(q t) probabilities.
    let mut pi = vec![0.0; states.len()];
    pi[0] = 1.0;
    let mean = q * t;
    let mut log_w = -mean;
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for k in 0..100_000u64 {
        if k > 0 {
            log_w += mean.ln() - (k as f64).ln();
        }
        let w = log_w.exp();
        total += w * pi.iter().zip(&h).map(|(p, v)| p * v).sum::<f64>();
        weight_sum += w;
        if k as f64 > mean && 1.0 - weight_sum < 1e-15 {
            return Ok(total);
        }
        let mut next: Vec<f64> = pi.iter().zip(&out).map(|(p, o)| p * (1.0 - o / q)).collect();
        for (s, row) in rows.iter().enumerate() {
            for &(j, rate) in row {
                next[j] += pi[s] * rate / q;
            }
        }
        pi = next;
    }
    Err(crate::error::Error::Numeric("uniformization did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::LambdaSpec;
    use approx::assert_relative_eq;

    fn rate_to(rates: &[(DualState, f64)], target: &DualState) -> f64 {
        rates.iter().filter(|r| &r.0 == target).map(|r| r.1).sum()
    }

    #[test]
    fn rate_examples() {
        let k = ModelParams::neutral(1, LambdaSpec::kingman(1.0).unwrap()).unwrap();
        let r = dual_rates(&k, &DualState::counts(&[2])).unwrap();
        assert_eq!(r, vec![(DualState::counts(&[1]), 1.0)]);
        let k2 = ModelParams::neutral(2, LambdaSpec::kingman(1.0).unwrap()).unwrap();
        let r = dual_rates(&k2, &DualState::counts(&[1, 1])).unwrap();
        assert_eq!(r, vec![(DualState::Cemetery, 1.0)]);
        let m = ModelParams::new(1, LambdaSpec::default(), 1.0, vec![0.6]).unwrap();
        let r = dual_rates(&m, &DualState::counts(&[2])).unwrap();
        assert_relative_eq!(rate_to(&r, &DualState::counts(&[1])), 1.2, max_relative = 1e-15);
        assert_relative_eq!(rate_to(&r, &DualState::Cemetery), 0.8, max_relative = 1e-15);
        assert!(dual_rates(&m, &DualState::Cemetery).unwrap().is_empty());
        assert!(dual_rates(&m, &DualState::counts(&[0])).unwrap().is_empty());
    }

    #[test]
    fn outflow_matches_generator_sum() {
        let spec = LambdaSpec::beta(1.4).unwrap().with_kingman(0.7).unwrap().with_atom(0.3, 0.4).unwrap();
        let p = ModelParams::new(3, spec, 0.9, vec![0.2, 0.3, 0.1]).unwrap();
        for n in [[1u32, 0, 0], [2, 1, 0], [3, 2, 4], [0, 5, 1]] {
            let rates = dual_rates(&p, &DualState::counts(&n)).unwrap();
            let sum: f64 = rates.iter().map(|r| r.1).sum();
            assert_relative_eq!(sum, total_outflow(&p, &n), max_relative = 1e-10);
            for (s, _) in &rates {
                if let Some(t) = s.total() {
                    assert!(t < n.iter().map(|&v| v as u64).sum());
                }
            }
        }
    }

    #[test]
    fn h_boundary_values() {
        let x = SimplexPoint::new(vec![0.3, 0.5]).unwrap();
        assert_eq!(duality_h(&x, &DualState::Cemetery), 0.0);
        assert_eq!(duality_h(&x, &DualState::counts(&[0, 0])), 1.0);
        assert_relative_eq!(duality_h(&x, &DualState::counts(&[2, 1])), 0.045, max_relative = 1e-15);
    }

    #[test]
    fn absorbing_states() {
        let p = ModelParams::neutral(1, LambdaSpec::kingman(1.0).unwrap()).unwrap();
        let mut rng = StreamSeed::new(1, "dual").rng(0);
        assert_eq!(simulate_dual(&p, &DualState::counts(&[0]), 5.0, &mut rng).unwrap(), DualState::counts(&[0]));
        assert_eq!(simulate_dual(&p, &DualState::Cemetery, 5.0, &mut rng).unwrap(), DualState::Cemetery);
    }

    #[test]
    fn two_state_moment() {
        let p = ModelParams::neutral(1, LambdaSpec::kingman(1.0).unwrap()).unwrap();
        let x = SimplexPoint::new(vec![0.5]).unwrap();
        let seed = StreamSeed::new(5, "two-state");
        let est = dual_moment(&p, &x, &DualState::counts(&[2]), 1.0, 40_000, &seed, Execution::Parallel).unwrap();
        let exact = (-1.0f64).exp() * 0.25 + (1.0 - (-1.0f64).exp()) * 0.5;
        assert!((est.mean - exact).abs() < 4.0 * est.stderr);
        let at_zero = dual_moment(&p, &x, &DualState::counts(&[2]), 0.0, 10, &seed, Execution::Sequential).unwrap();
        assert_eq!(at_zero.mean, 0.25);
        assert_eq!(at_zero.stderr, 0.0);
        let corner = SimplexPoint::new(vec![1.0]).unwrap();
        let est = dual_moment(&p, &corner, &DualState::counts(&[3]), 2.0, 100, &seed, Execution::Sequential).unwrap();
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn exact_moment_examples() {
        let p = ModelParams::neutral(1, LambdaSpec::kingman(1.0).unwrap()).unwrap();
        let x = SimplexPoint::new(vec![0.5]).unwrap();
        let v = dual_moment_exact(&p, &x, &DualState::counts(&[2]), 1.0).unwrap();
        let exact = (-1.0f64).exp() * 0.25 + (1.0 - (-1.0f64).exp()) * 0.5;
        assert_relative_eq!(v, exact, max_relative = 1e-13);
        assert_eq!(dual_moment_exact(&p, &x, &DualState::counts(&[2]), 0.0).unwrap(), 0.25);
        // Three lines: A leaves 3 at rate 3, 2 at rate 1.
        let v = dual_moment_exact(&p, &x, &DualState::counts(&[3]), 0.7).unwrap();
        let (a, b) = ((-3.0f64 * 0.7).exp(), (-0.7f64).exp());
        let p3 = a;
        let p2 = 1.5 * (b - a);
        let expected = p3 * 0.125 + p2 * 0.25 + (1.0 - p3 - p2) * 0.5;
        assert_relative_eq!(v, expected, max_relative = 1e-12);
    }

    #[test]
    fn exact_matches_simulation_with_mutation() {
        let spec = LambdaSpec::beta(1.5).unwrap().with_kingman(0.5).unwrap();
        let p = ModelParams::new(2, spec, 0.5, vec![0.3, 0.3]).unwrap();
        let x = SimplexPoint::new(vec![0.2, 0.5]).unwrap();
        let n0 = DualState::counts(&[1, 2]);
        let exact = dual_moment_exact(&p, &x, &n0, 0.5).unwrap();
        let seed = StreamSeed::new(9, "exact");
        let est = dual_moment(&p, &x, &n0, 0.5, 40_000, &seed, Execution::Parallel).unwrap();
        assert!(est.z_score(exact).abs() < 4.0);
    }
}
