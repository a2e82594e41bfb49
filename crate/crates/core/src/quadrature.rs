//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! Integrands with integrable endpoint singularities are handled by starting
//! the bisection from a partition that isolates `[a, a + ε]` and `[b − ε, b]`
//! with `ε = 1e−6`; the rule never evaluates the endpoints themselves.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_subdivisions: 5000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_subdivisions > 0) {
            return Err(Error::Invalid(format!("quadrature tolerances must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Value and estimated absolute error of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

/// Abscissa of the endpoint splits.
pub const ENDPOINT_SPLIT: f64 = 1e-6;

// QUADPACK qk21 nodes and weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_424,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_460,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_k = (fc * WGK[10]).abs();
    let mut f1 = [0.0; 10];
    let mut f2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let lo = f(center - x);
        let hi = f(center + x);
        f1[j] = lo;
        f2[j] = hi;
        kronrod += WGK[j] * (lo + hi);
        abs_k += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let result = kronrod * half;
    let res_abs = abs_k * half.abs();
    let res_asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration bounds must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, abs_error: 0.0, subdivisions: 0 });
    }
    let mut cuts = vec![a];
    if b - a > 4.0 * ENDPOINT_SPLIT {
        cuts.push(a + ENDPOINT_SPLIT);
        cuts.push(b - ENDPOINT_SPLIT);
    }
    cuts.push(b);
    integrate_partition(&f, &cuts, cfg)
}

/// Integrate over `[cuts[0], cuts.last()]` starting from the given partition.
pub fn integrate_partition<F: Fn(f64) -> f64>(f: &F, cuts: &[f64], cfg: &QuadratureConfig) -> Result<Integral> {
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let (v, e) = gauss_kronrod(f, w[0], w[1]);
        value += v;
        error += e;
        heap.push(Segment { a: w[0], b: w[1], value: v, error: e });
    }
    let mut subdivisions = heap.len();
    loop {
        if !value.is_finite() {
            return Err(Error::Numeric("integrand produced a non-finite value".into()));
        }
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= tol {
            break;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Numeric(format!(
                "quadrature did not converge: value {value:.6e}, error {error:.3e} > tol {tol:.3e} after {subdivisions} segments"
            )));
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment can no longer be bisected in floating point.
            return Err(Error::Numeric(format!("quadrature stalled near x = {mid:.17e}")));
        }
        let (v1, e1) = gauss_kronrod(f, worst.a, mid);
        let (v2, e2) = gauss_kronrod(f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
    }
    // Re-sum to shed drift from the incremental updates.
    let value = heap.iter().map(|s| s.value).sum();
    let abs_error = heap.iter().map(|s| s.error).sum();
    Ok(Integral { value, abs_error, subdivisions })
}
