//! Statistics toolkit used by the latency analysis.
//!
//! Everything here is implemented directly against hand-checkable
//! formulas — descriptive statistics, Pearson/Spearman correlation,
//! ordinary-least-squares fits with a two-sided t-test on the slope, and
//! the two-sample Kolmogorov–Smirnov test with its classic asymptotic
//! p-value. No external numerics: the special functions (log-gamma,
//! regularized incomplete beta) are the standard series/continued-fraction
//! implementations, accurate to well below the 1e-9 relative tolerance the
//! test suite holds them to.
//!
//! Inputs are plain `&[f64]` samples. Every function validates that its
//! samples are non-empty and finite; invalid input is an `Err`, never a
//! silent NaN.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("samples have different lengths ({0} vs {1})")]
    MismatchedLengths(usize, usize),
    #[error("need at least {need} observations, got {have}")]
    TooFew { need: usize, have: usize },
    #[error("input is constant; statistic undefined")]
    ConstantInput,
    #[error("percentile must lie in [0, 100], got {0}")]
    BadPercentile(f64),
    #[error("histogram range is empty or inverted")]
    BadRange,
}

fn check(xs: &[f64]) -> Result<(), StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn check_pair(x: &[f64], y: &[f64], need: usize) -> Result<(), StatsError> {
    check(x)?;
    check(y)?;
    if x.len() != y.len() {
        return Err(StatsError::MismatchedLengths(x.len(), y.len()));
    }
    if x.len() < need {
        return Err(StatsError::TooFew { need, have: x.len() });
    }
    Ok(())
}

/// Arithmetic mean.
pub fn mean(xs: &[f64]) -> Result<f64, StatsError> {
    check(xs)?;
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Median: the 50th percentile (average of the two middle order statistics
/// for even-length samples).
pub fn median(xs: &[f64]) -> Result<f64, StatsError> {
    percentile(xs, 50.0)
}

/// Percentile with linear interpolation between closest ranks: for a
/// sorted sample `v` of length `n`, rank `p/100·(n−1)` is split into an
/// integer part and a fraction used to interpolate between neighbours.
/// `percentile(xs, 0)` is the minimum and `percentile(xs, 100)` the
/// maximum.
pub fn percentile(xs: &[f64], p: f64) -> Result<f64, StatsError> {
    check(xs)?;
    if !(0.0..=100.0).contains(&p) || !p.is_finite() {
        return Err(StatsError::BadPercentile(p));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if frac == 0.0 || lo + 1 == v.len() {
        Ok(v[lo])
    } else {
        Ok(v[lo] + frac * (v[lo + 1] - v[lo]))
    }
}

/// Pearson product-moment correlation of two equal-length samples.
/// Undefined (an error) when either sample is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Ranks with ties resolved by averaging (1-based ranks).
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("values are finite"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..=j share one value; their rank is the mean of the
        // 1-based positions they would span.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y, 2)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Ordinary-least-squares fit of `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Two-sided p-value for the null hypothesis `slope = 0`, from the
    /// t-statistic with `n − 2` degrees of freedom.
    pub p_value: f64,
}

/// Least-squares regression with a two-sided significance test on the
/// slope. Needs at least three points and a non-constant `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, StatsError> {
    check_pair(x, y, 3)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    if syy == 0.0 {
        // y is constant: the zero-slope fit is exact and carries no
        // evidence against the null.
        return Ok(LinearFit { slope: 0.0, intercept: my, r_squared: 0.0, p_value: 1.0 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = (syy - slope * sxy).max(0.0);
    let r_squared = 1.0 - sse / syy;
    let df = n - 2.0;
    let p_value = if sse == 0.0 {
        0.0 // exact fit: infinite t-statistic
    } else {
        let se = (sse / df / sxx).sqrt();
        student_t_two_sided(slope / se, df)
    };
    Ok(LinearFit { slope, intercept, r_squared, p_value })
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom:
/// `P(|T| ≥ |t|) = I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula keeps the approximation in its sweet spot.
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta function `I_x(a, b)` via the standard
/// continued fraction (modified Lentz), with the symmetry transform that
/// keeps the fraction rapidly convergent.
fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Continued-fraction kernel for the incomplete beta function.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sample Kolmogorov–Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `D = sup |ECDF_a − ECDF_b|`.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test.
///
/// The statistic is the exact supremum distance between the two empirical
/// CDFs, found by a single sweep over the merged sorted samples (all
/// duplicates of a value are consumed before the CDFs are compared). The
/// p-value is the classic asymptotic approximation
/// `Q(λ) = 2·Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}` evaluated at
/// `λ = (√ne + 0.12 + 0.11/√ne)·D` with `ne = m·n/(m+n)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    check(a)?;
    check(b)?;
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).expect("values are finite"));
    sb.sort_by(|x, y| x.partial_cmp(y).expect("values are finite"));

    let (m, n) = (sa.len(), sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < m || j < n {
        // The next step value is the smaller head; consume every duplicate
        // of it from both samples before measuring the gap.
        let v = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < m && sa[i] == v {
            i += 1;
        }
        while j < n && sb[j] == v {
            j += 1;
        }
        let fa = i as f64 / m as f64;
        let fb = j as f64 / n as f64;
        d = d.max((fa - fb).abs());
    }

    let ne = (m as f64 * n as f64 / (m + n) as f64).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_q(lambda) })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2·Σ (−1)^{k−1} e^{−2k²λ²}`, clamped to `[0, 1]`. For λ small
/// enough that the series is useless the mass is all there: returns 1.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut prev_term = f64::MAX;
    for k in 1..=200 {
        let k = k as f64;
        let term = 2.0 * (-2.0 * k * k * lambda * lambda).exp();
        sum += if (k as u64) % 2 == 1 { term } else { -term };
        if term <= 1e-12 * sum.abs() || term <= 1e-14 || term >= prev_term {
            // Converged — or the terms stopped shrinking, which only
            // happens for tiny λ where Q ≈ 1.
            if term >= prev_term {
                return 1.0;
            }
            return sum.clamp(0.0, 1.0);
        }
        prev_term = term;
    }
    1.0
}

/// Fixed-width histogram of the values falling inside `[lo, hi]`; a value
/// equal to `hi` lands in the last bin. Values outside the range are not
/// counted (callers report them separately as outliers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges from `lo` to `hi`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

pub fn histogram(xs: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram, StatsError> {
    check(xs)?;
    if bins == 0 {
        return Err(StatsError::BadRange);
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(StatsError::BadRange);
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    for &v in xs {
        if v < lo || v > hi {
            continue;
        }
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}
