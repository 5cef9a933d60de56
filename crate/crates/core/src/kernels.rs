//! Binomial and Poisson tail sums and the large-deviation exponents used by
//! every stopping rule.
//!
//! Tail sums add individual pmf terms. Each term is evaluated with Loader's
//! saddle-point form (`stirlerr` + `bd0`), which keeps the relative error of a
//! single term near machine precision even when `n` is in the thousands and
//! the term sits far out in a tail. Terms are accumulated from the mode
//! outward with Neumaier compensation, and the walk stops once the remaining
//! (log-concave, hence geometrically dominated) tail is below `1e-17` of the
//! running sum.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stop walking a tail once the remaining mass bound drops below this
/// fraction of the accumulated sum.
const TAIL_REL_CUTOFF: f64 = 1e-17;

// ln(n!) - ln(sqrt(2 pi n) (n/e)^n) for n = 0..=15
#[allow(clippy::excessive_precision)]
const STIRLERR_SMALL: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_670_26,
    0.041_340_695_955_409_294_093_822_08,
    0.027_677_925_684_998_339_148_789_29,
    0.020_790_672_103_765_093_111_522_77,
    0.016_644_691_189_821_192_163_194_87,
    0.013_876_128_823_070_747_998_745_73,
    0.011_896_709_945_891_770_095_055_72,
    0.010_411_265_261_972_096_497_478_57,
    0.009_255_462_182_712_732_917_728_637,
    0.008_330_563_433_362_871_256_469_319,
    0.007_573_675_487_951_840_794_972_024,
    0.006_942_840_107_209_529_865_664_153,
    0.006_408_994_188_004_207_068_439_631,
    0.005_951_370_112_758_847_735_624_416,
    0.005_554_733_551_962_801_371_038_69,
];

/// Error term of Stirling's approximation to `ln(n!)`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLERR_SMALL[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m - x`, evaluated without cancellation near `x = m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / m).ln() + m - x
}

/// `(n p, n (1 - p))` with the complement formed on whichever side is exact.
fn split_mean(n: u64, p: f64) -> (f64, f64) {
    let nf = n as f64;
    if p < 0.5 {
        let np = nf * p;
        (np, nf - np)
    } else {
        let nq = nf * (1.0 - p);
        (nf - nq, nq)
    }
}

/// Binomial probability mass `C(n, k) p^k (1-p)^(n-k)` for `p` in `(0, 1)`.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n || !(p > 0.0 && p < 1.0) {
        return 0.0;
    }
    let (np, nq) = split_mean(n, p);
    binomial_pmf_split(k, n, np, nq, p)
}

fn binomial_pmf_split(k: u64, n: u64, np: f64, nq: f64, p: f64) -> f64 {
    if k == 0 {
        return (n as f64 * (-p).ln_1p()).exp();
    }
    if k == n {
        return (n as f64 * p.ln()).exp();
    }
    let (kf, nf) = (k as f64, n as f64);
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, np) - bd0(nf - kf, nq);
    let lf = 2.0 * LN_SQRT_2PI + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Poisson probability mass `m^k e^{-m} / k!` for mean `m > 0`.
pub fn poisson_pmf(k: u64, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if k == 0 {
        return (-mean).exp();
    }
    let kf = k as f64;
    (-stirlerr(k) - bd0(kf, mean)).exp() / (2.0 * PI * kf).sqrt()
}

/// Probability that the `gamma`-th success of a Bernoulli(`p`) sequence
/// occurs exactly at trial `m`.
pub fn negative_binomial_trials_pmf(m: u64, gamma: u64, p: f64) -> f64 {
    if gamma == 0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if m < gamma {
        return 0.0;
    }
    binomial_pmf(gamma, m, p) * (gamma as f64 / m as f64)
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums `term(i)` for `i` in `[lo, hi]` (`hi = None` is unbounded) for a
/// log-concave sequence whose mode is at `mode`.
fn sum_log_concave(lo: u64, hi: Option<u64>, mode: u64, term: impl Fn(u64) -> f64) -> f64 {
    let start = match hi {
        Some(h) => mode.clamp(lo, h),
        None => mode.max(lo),
    };
    let first = term(start);
    if first == 0.0 {
        // every other term in range is further from the mode
        return 0.0;
    }
    let mut acc = Neumaier::default();
    acc.add(first);

    let mut prev = first;
    let mut i = start;
    while i > lo {
        i -= 1;
        let t = term(i);
        acc.add(t);
        if negligible_rest(t, prev, acc.value()) {
            break;
        }
        prev = t;
    }

    let mut prev = first;
    let mut i = start;
    loop {
        if hi.is_some_and(|h| i >= h) {
            break;
        }
        i += 1;
        let t = term(i);
        acc.add(t);
        if negligible_rest(t, prev, acc.value()) {
            break;
        }
        prev = t;
    }
    acc.value()
}

fn negligible_rest(t: f64, prev: f64, sum: f64) -> bool {
    if t == 0.0 {
        return true;
    }
    let r = t / prev;
    r < 1.0 && t * r / (1.0 - r) <= sum * TAIL_REL_CUTOFF
}

/// Unchecked binomial tail: `sum_{i=k}^{l} C(n,i) p^i (1-p)^(n-i)`, zero for
/// `p` outside `(0, 1)` or an empty range.
pub(crate) fn binom_tail(k: u64, l: u64, n: u64, p: f64) -> f64 {
    let l = l.min(n);
    if k > l || !(p > 0.0 && p < 1.0) {
        return 0.0;
    }
    if k == 0 && l == n {
        return 1.0;
    }
    let (np, nq) = split_mean(n, p);
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as u64;
    sum_log_concave(k, Some(l), mode, |i| binomial_pmf_split(i, n, np, nq, p))
}

/// Unchecked Poisson tail with mean `n * lambda`; `l = None` sums to infinity.
pub(crate) fn poisson_tail(k: u64, l: Option<u64>, n: u64, lambda: f64) -> f64 {
    if lambda <= 0.0 || lambda.is_nan() || l.is_some_and(|l| k > l) {
        return 0.0;
    }
    if k == 0 && l.is_none() {
        return 1.0;
    }
    let mean = n as f64 * lambda;
    poisson_tail_mean(k, l, mean)
}

pub(crate) fn poisson_tail_mean(k: u64, l: Option<u64>, mean: f64) -> f64 {
    if mean <= 0.0 || l.is_some_and(|l| k > l) {
        return 0.0;
    }
    let mode = if mean < 1e18 {
        mean.floor() as u64
    } else {
        u64::MAX / 2
    };
    sum_log_concave(k, l, mode, |i| poisson_pmf(i, mean))
}

/// Upper summation index of a Poisson tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperIndex {
    Finite(i64),
    Infinite,
}

impl From<i64> for UpperIndex {
    fn from(l: i64) -> Self {
        UpperIndex::Finite(l)
    }
}

/// `S_B(k, l, n, p)`: the binomial mass on `[k, l]`, defined as 0 whenever
/// `p` is outside the open unit interval and for the empty range `k > l`.
pub fn s_b(k: i64, l: i64, n: i64, p: f64) -> Result<f64> {
    if n <= 0 {
        return Err(Error::invalid(format!(
            "s_b: sample size n = {n} must be positive"
        )));
    }
    if k < 0 {
        return Err(Error::invalid(format!(
            "s_b: lower index k = {k} is negative"
        )));
    }
    if l > n {
        return Err(Error::invalid(format!(
            "s_b: upper index l = {l} exceeds n = {n}"
        )));
    }
    if k > l {
        return Ok(0.0);
    }
    Ok(binom_tail(k as u64, l as u64, n as u64, p))
}

/// `S_P(k, l, n, lambda)`: the Poisson(`n lambda`) mass on `[k, l]`, zero for
/// `lambda <= 0` and for the empty range.
pub fn s_p(k: i64, l: impl Into<UpperIndex>, n: i64, lambda: f64) -> Result<f64> {
    if n <= 0 {
        return Err(Error::invalid(format!(
            "s_p: sample size n = {n} must be positive"
        )));
    }
    if k < 0 {
        return Err(Error::invalid(format!(
            "s_p: lower index k = {k} is negative"
        )));
    }
    let upper = match l.into() {
        UpperIndex::Finite(l) if l < k => return Ok(0.0),
        UpperIndex::Finite(l) => Some(l as u64),
        UpperIndex::Infinite => None,
    };
    Ok(poisson_tail(k as u64, upper, n as u64, lambda))
}

fn check_unit(name: &str, z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name}: z = {z} is outside [0, 1]")))
    }
}

/// Binomial large-deviation exponent.
pub fn m_b(z: f64, mu: f64) -> Result<f64> {
    check_unit("m_b", z)?;
    Ok(m_b_unchecked(z, mu))
}

pub(crate) fn m_b_unchecked(z: f64, mu: f64) -> f64 {
    if !(mu > 0.0 && mu < 1.0) {
        return f64::NEG_INFINITY;
    }
    if z == 0.0 {
        (-mu).ln_1p()
    } else if z == 1.0 {
        mu.ln()
    } else {
        z * (mu / z).ln() + (1.0 - z) * ((1.0 - mu) / (1.0 - z)).ln()
    }
}

/// Inverse-sampling exponent, `m_b(z, mu) / z` on the interior.
pub fn m_i(z: f64, mu: f64) -> Result<f64> {
    check_unit("m_i", z)?;
    if !(mu > 0.0 && mu < 1.0) || z == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if z == 1.0 {
        return Ok(mu.ln());
    }
    Ok((mu / z).ln() + (1.0 / z - 1.0) * ((1.0 - mu) / (1.0 - z)).ln())
}

/// Poisson large-deviation exponent.
pub fn m_p(z: f64, lambda: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::invalid(format!("m_p: z = {z} is negative")));
    }
    Ok(m_p_unchecked(z, lambda))
}

pub(crate) fn m_p_unchecked(z: f64, lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        f64::NEG_INFINITY
    } else if z == 0.0 {
        -lambda
    } else {
        z - lambda + z * (lambda / z).ln()
    }
}
