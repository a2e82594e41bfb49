//! Validation suites behind `lookdown validate`.

use lambda_lookdown::closed_forms;
use lambda_lookdown::dual::{dual_moment_exact, DualState};
use lambda_lookdown::estimation::{
    coalescence_run, coupon_level_histogram, duality_check, empirical_charfunc, estimate_disappearance_order,
    estimate_explosion_time, estimate_fixation_time, estimate_stationary_time, fixation_time_samples, ComparisonReport, Estimate,
    KsResult,
};
use lambda_lookdown::lambda::{LambdaSpec, ModelParams, SimplexPoint};
use lambda_lookdown::parallel::Execution;
use lambda_lookdown::quadrature::QuadratureConfig;
use lambda_lookdown::rng::StreamSeed;

use crate::config::Suite;
use crate::CliError;

const Z: f64 = 4.0;
/// `√n_e · D` above this has asymptotic p-value below 0.01.
const KS_CRITICAL: f64 = 1.628;

type Reports = Result<Vec<ComparisonReport>, CliError>;

fn sp(x: &[f64]) -> Result<SimplexPoint, CliError> {
    Ok(SimplexPoint::new(x.to_vec())?)
}

fn kingman(d: usize, c: f64) -> Result<ModelParams, CliError> {
    Ok(ModelParams::neutral(d, LambdaSpec::kingman(c)?)?)
}

pub fn run_suite(suite: Suite, replicates: u64, seed: u64, exec: Execution) -> Reports {
    if replicates < 10 {
        return Err(CliError::Usage("at least 10 replicates are needed".into()));
    }
    let s = |name: &str| StreamSeed::new(seed, name);
    Ok(match suite {
        Suite::Formulas => formulas(replicates, &s, exec)?,
        Suite::Duality => duality(replicates, &s, exec)?,
        Suite::Coalescence => coalescence(replicates, &s)?,
        Suite::Stationarity => stationarity(replicates, &s, exec)?,
        Suite::All => {
            let mut all = formulas(replicates, &s, exec)?;
            all.extend(duality(replicates, &s, exec)?);
            all.extend(coalescence(replicates, &s)?);
            all.extend(stationarity(replicates, &s, exec)?);
            all
        }
    })
}

fn formulas(n: u64, s: &dyn Fn(&str) -> StreamSeed, exec: Execution) -> Reports {
    let mut out = Vec::new();
    let quad = QuadratureConfig::default();
    for (x, label) in [(sp(&[0.5])?, "x=(0.5)"), (sp(&[1.0 / 3.0, 1.0 / 3.0])?, "x=(1/3,1/3)")] {
        let f = closed_forms::mean_fixation_kingman(&x, 1, 1.0)?.value;
        let e = estimate_fixation_time(&kingman(x.d(), 1.0)?, &x, 1, n, None, &s("fix-kingman"), exec)?;
        out.push(ComparisonReport::against_formula("fix-mean-kingman", label, f, e.estimate, Z));
    }
    for p in [1u64, 2, 5] {
        let e = estimate_explosion_time(&kingman(1, 1.0)?, p, n, None, &s("explosion-kingman"), exec)?;
        out.push(ComparisonReport::against_formula("explosion-kingman", &format!("p={p}"), 2.0 / p as f64, e.estimate, Z));
    }
    let beta = ModelParams::neutral(1, LambdaSpec::beta(1.5)?)?;
    let f = closed_forms::mean_explosion_beta(1, 1.5, &quad)?.value;
    let e = estimate_explosion_time(&beta, 1, n.min(20_000), Some(10_000), &s("explosion-beta"), exec)?;
    out.push(ComparisonReport::with_tolerance("explosion-beta", "alpha=1.5 k=1 M=1e4", f, e.estimate, e.bias_bound(), Z));
    let x = sp(&[0.2, 0.3])?;
    let hist = coupon_level_histogram(&x, 1, n, &s("coupon"), exec)?;
    for p in 2..=5u64 {
        let est = Estimate::proportion(hist.get(&p).copied().unwrap_or(0), n);
        out.push(ComparisonReport::against_formula("coupon-pmf", &format!("x=(0.2,0.3) k=1 p={p}"), closed_forms::coupon_pmf(&x, 1, p)?.value, est, Z));
    }
    let x = sp(&[0.5, 0.3])?;
    let dist = estimate_disappearance_order(&kingman(2, 1.0)?, &x, n, &s("orders"), exec)?;
    for order in closed_forms::all_orders(3) {
        let f = closed_forms::disappearance_order_prob(&x, &order)?;
        out.push(ComparisonReport::against_formula("order-prob", &format!("{order:?}"), f, dist.probability(&order), Z));
    }
    let x = sp(&[0.5])?;
    let samples = fixation_time_samples(&kingman(1, 1.0)?, &x, 1, n, None, &s("charfunc"), exec)?;
    for t in [0.5, 1.0, 2.0] {
        let phi = closed_forms::fixation_charfunc_kingman(&x, 1, t, &closed_forms::SeriesConfig::default())?;
        let (re, im) = empirical_charfunc(&samples, t);
        out.push(ComparisonReport::against_formula("charfunc", &format!("re t={t}"), phi.re, re, Z));
        out.push(ComparisonReport::against_formula("charfunc", &format!("im t={t}"), phi.im, im, Z));
    }
    Ok(out)
}

fn duality(n: u64, s: &dyn Fn(&str) -> StreamSeed, exec: Execution) -> Reports {
    let cases = vec![
        (kingman(1, 1.0)?, sp(&[0.5])?, vec![2u32]),
        (ModelParams::new(1, LambdaSpec::beta(1.5)?, 0.5, vec![0.4])?, sp(&[0.3])?, vec![2]),
        (ModelParams::new(2, LambdaSpec::kingman(1.0)?, 0.5, vec![0.3, 0.3])?, sp(&[0.2, 0.5])?, vec![1, 1]),
        (ModelParams::new(2, LambdaSpec::kingman(1.0)?, 0.5, vec![0.3, 0.3])?, sp(&[0.2, 0.5])?, vec![2, 1]),
    ];
    let mut out = Vec::new();
    for (i, (p, x, n0)) in cases.iter().enumerate() {
        for t in [0.25, 1.0] {
            out.push(duality_check(p, x, n0, t, n, &s(&format!("duality-{i}")), exec, Z)?);
            let exact = dual_moment_exact(p, x, &DualState::counts(n0), t)?;
            let last = out.last().expect("just pushed").clone();
            out.push(ComparisonReport::against_formula("duality-exact", &last.label, exact, last.estimate, Z));
        }
    }
    Ok(out)
}

fn coalescence(n: u64, s: &dyn Fn(&str) -> StreamSeed) -> Reports {
    let p = kingman(1, 1.0)?;
    let (x, y) = (sp(&[0.3])?, sp(&[0.7])?);
    let runs = n.min(1000);
    let seed = s("coalescence");
    let mut mismatches = 0;
    for i in 0..runs {
        let r = coalescence_run(&p, &x, &y, 100, &seed, i)?;
        if r.coincidence_time != r.saturation_time {
            mismatches += 1;
        }
    }
    let est = Estimate::new(mismatches as f64 / runs as f64, 0.0, runs);
    Ok(vec![ComparisonReport::against_formula("coalescence", "mismatch fraction N=100", 0.0, est, Z)])
}

fn ks_report(label: &str, ks: KsResult, n_eff: f64) -> ComparisonReport {
    let est = Estimate::new(ks.statistic, 1.0 / n_eff.sqrt(), n_eff as u64);
    ComparisonReport::against_formula("stationarity-ks", label, 0.0, est, KS_CRITICAL)
}

fn stationarity(n: u64, s: &dyn Fn(&str) -> StreamSeed, exec: Execution) -> Reports {
    let mut out = Vec::new();
    for (c, theta, label) in [(2.0, 2.0, "c=2 theta=2"), (2.0, 1.0, "c=2 theta=1")] {
        let p = ModelParams::new(1, LambdaSpec::kingman(c)?, theta, vec![0.5])?;
        let f = closed_forms::stationary_time_mean(c, theta)?.value;
        let e = estimate_stationary_time(&p, n, None, None, &s("stationary"), exec)?;
        out.push(ComparisonReport::against_formula("stationary-mean", label, f, e.estimate.estimate, Z));
    }
    let p = ModelParams::new(1, LambdaSpec::kingman(1.0)?, 1.0, vec![0.5])?;
    let pairs = n.min(2_000);
    let x = sp(&[0.3])?;
    let e = estimate_stationary_time(&p, 10, None, Some((&x, 50, pairs)), &s("stationary-diagnostics"), exec)?;
    let d = e.diagnostics.expect("Kingman runs produce diagnostics");
    let half = pairs as f64 / 2.0;
    out.push(ks_report("independence N=50", d.independence, half * half / pairs as f64));
    out.push(ks_report("stationarity N=50", d.stationarity, half * half / pairs as f64));
    Ok(out)
}
