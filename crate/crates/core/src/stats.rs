//! Rank-based tests, multiple-comparison adjustment, correlation and kernel
//! density estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub statistic: f64,
    /// Degrees of freedom; 0 when the test has none.
    pub df: usize,
    pub p_value: f64,
    pub p_adjusted: Option<f64>,
    pub method: String,
    pub group_sizes: Vec<usize>,
    /// Rank-biserial correlation for two-sample tests, positive when the
    /// first sample tends to be larger.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_size: Option<f64>,
}

pub const METHOD_KRUSKAL_WALLIS: &str = "kruskal-wallis (tie-corrected, chi-square)";
pub const METHOD_MWU_EXACT: &str = "mann-whitney-u (exact)";
pub const METHOD_MWU_NORMAL: &str = "mann-whitney-u (normal, tie- and continuity-corrected)";
pub const METHOD_HOLM: &str = "holm";

// ---------------------------------------------------------------------------
// special functions

#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

/// Regularized lower incomplete gamma by its power series; valid for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma by Lentz's continued fraction; valid
/// for x >= a + 1.
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - gamma_p_series(a, x)).clamp(0.0, 1.0)
    } else {
        gamma_q_fraction(a, x).clamp(0.0, 1.0)
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    gamma_q(df as f64 / 2.0, x / 2.0)
}

/// `P(Z > z)` for a standard normal.
pub fn normal_sf(z: f64) -> f64 {
    // erfc(t) = Q(1/2, t^2) for t >= 0
    let t = z / std::f64::consts::SQRT_2;
    if t >= 0.0 {
        0.5 * gamma_q(0.5, t * t)
    } else {
        1.0 - 0.5 * gamma_q(0.5, t * t)
    }
}

// ---------------------------------------------------------------------------
// ranks

/// Mid-ranks (1-based) of `values`, plus the tie term `sum(t^3 - t)`.
pub fn mid_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("values must be finite".into()))
    }
}

pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<StatTestResult> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(
            "kruskal-wallis needs at least 2 groups".into(),
        ));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument(
            "every group needs at least one value".into(),
        ));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    check_finite(&pooled)?;
    let n = pooled.len();
    if n < 3 {
        return Err(Error::InvalidArgument(
            "kruskal-wallis needs at least 3 values".into(),
        ));
    }
    let (ranks, ties) = mid_ranks(&pooled);
    let nf = n as f64;
    let correction = 1.0 - ties / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Err(Error::DegenerateData("all values are identical".into()));
    }

    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = ((12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0)) / correction).max(0.0);
    let df = groups.len() - 1;
    Ok(StatTestResult {
        statistic: h,
        df,
        p_value: chi_square_sf(h, df),
        p_adjusted: None,
        method: METHOD_KRUSKAL_WALLIS.into(),
        group_sizes: groups.iter().map(Vec::len).collect(),
        effect_size: None,
    })
}

/// Largest combined sample size for which the exact null distribution is used.
pub const MWU_EXACT_MAX_N: usize = 20;

/// `counts[u]` = number of arrangements of `m` first-sample and `n`
/// second-sample observations with first-sample statistic `u` (no ties).
pub fn mwu_null_counts(m: usize, n: usize) -> Vec<u64> {
    // table[i][j] is the distribution for i first-sample and j second-sample values
    let mut table: Vec<Vec<Vec<u64>>> = vec![vec![Vec::new(); n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            table[i][j] = if i == 0 || j == 0 {
                vec![1]
            } else {
                let mut dist = vec![0u64; i * j + 1];
                // largest value from the first sample: it beats all j others
                for (u, &c) in table[i - 1][j].iter().enumerate() {
                    dist[u + j] += c;
                }
                for (u, &c) in table[i][j - 1].iter().enumerate() {
                    dist[u] += c;
                }
                dist
            };
        }
    }
    std::mem::take(&mut table[m][n])
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<StatTestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "mann-whitney u needs two non-empty samples".into(),
        ));
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = mid_ranks(&pooled);
    let ra: f64 = ranks[..na].iter().sum();
    let (naf, nbf) = (na as f64, nb as f64);
    let u_a = ra - naf * (naf + 1.0) / 2.0;
    let u_b = naf * nbf - u_a;
    let u = u_a.min(u_b);
    let n = na + nb;

    let (p, method) = if n <= MWU_EXACT_MAX_N && ties == 0.0 {
        let counts = mwu_null_counts(na, nb);
        let total: u64 = counts.iter().sum();
        // u is an integer here since there are no ties
        let below: u64 = counts[..=u.round() as usize].iter().sum();
        (
            (2.0 * below as f64 / total as f64).min(1.0),
            METHOD_MWU_EXACT,
        )
    } else {
        let nf = n as f64;
        let mean = naf * nbf / 2.0;
        let var = naf * nbf / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)));
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
            (2.0 * normal_sf(z)).min(1.0)
        };
        (p, METHOD_MWU_NORMAL)
    };

    Ok(StatTestResult {
        statistic: u,
        df: 0,
        p_value: p,
        p_adjusted: None,
        method: method.into(),
        group_sizes: vec![na, nb],
        effect_size: Some((u_a - u_b) / (naf * nbf)),
    })
}

/// Holm step-down adjustment; output is in input order.
pub fn holm_correct(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!(
            "p-value {p} outside [0, 1]"
        )));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        let scaled = ((m - rank) as f64 * p_values[idx]).min(1.0);
        running = running.max(scaled);
        adjusted[idx] = running;
    }
    Ok(adjusted)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of ascending `sorted` data, `q` in [0, 1].
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(
            "pearson_r needs equal-length inputs".into(),
        ));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "pearson_r needs at least 2 pairs".into(),
        ));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.xs, &self.ys)
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

pub const DEFAULT_KDE_GRID: usize = 256;

/// Silverman's rule-of-thumb bandwidth `0.9 * min(sd, IQR/1.34) * n^(-1/5)`,
/// falling back to `sd` when the IQR is zero.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = sample_sd(&sorted);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let range = sorted[sorted.len() - 1] - sorted[0];
    (0.9 * spread * (sorted.len() as f64).powf(-0.2)).max(1e-9 * range)
}

/// Gaussian KDE on a uniform grid over `[min - 3h, max + 3h]`.
///
/// The curve is rescaled so its trapezoid integral over the grid is 1; this
/// absorbs the kernel mass beyond the grid ends and the quadrature error.
pub fn kde_density(values: &[f64], grid_size: usize) -> Result<DensityCurve> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(
            "grid_size must be at least 2".into(),
        ));
    }
    check_finite(values)?;
    if values.len() < 2 {
        return Err(Error::DegenerateData("kde needs at least 2 values".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo == hi {
        return Err(Error::DegenerateData("kde input is constant".into()));
    }
    let h = silverman_bandwidth(values);
    let (start, end) = (lo - 3.0 * h, hi + 3.0 * h);
    let step = (end - start) / (grid_size - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let xs: Vec<f64> = (0..grid_size).map(|i| start + step * i as f64).collect();
    let mut ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    let area = trapezoid(&xs, &ys);
    if area > 0.0 {
        ys.iter_mut().for_each(|y| *y /= area);
    }
    Ok(DensityCurve {
        xs,
        ys,
        bandwidth: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert_abs_diff_eq!(ln_gamma(n as f64), fact.ln(), epsilon = 1e-10);
            fact *= n as f64;
        }
        assert_abs_diff_eq!(
            ln_gamma(0.5),
            std::f64::consts::PI.sqrt().ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn chi_square_tail_matches_statrs() {
        for df in [1usize, 2, 3, 5, 10, 30] {
            let reference = ChiSquared::new(df as f64).unwrap();
            for &x in &[0.01, 0.5, 1.0, 2.5, 3.857, 7.0, 15.0, 40.0, 80.0] {
                let ours = chi_square_sf(x, df);
                let theirs = reference.sf(x);
                assert!(
                    (ours - theirs).abs() < 1e-12,
                    "df={df} x={x}: {ours} vs {theirs}"
                );
            }
        }
    }

    #[test]
    fn chi_square_tail_edges() {
        assert_eq!(chi_square_sf(0.0, 1), 1.0);
        assert_eq!(chi_square_sf(0.0, 4), 1.0);
        assert!(chi_square_sf(500.0, 1) < 1e-100);
    }

    #[test]
    fn normal_tail_matches_reference() {
        // scipy.stats.norm.sf
        let reference = [
            (-3.0, 0.9986501019683699),
            (-1.0, 0.8413447460685429),
            (0.0, 0.5),
            (0.5, 0.3085375387259869),
            (1.96, 0.024997895148220435),
            (3.0, 0.0013498980316300933),
            (6.0, 9.865876450376946e-10),
        ];
        for (z, p) in reference {
            assert!((normal_sf(z) - p).abs() < 1e-14, "z={z}: {}", normal_sf(z));
        }
    }

    #[test]
    fn mid_ranks_with_ties() {
        let (r, t) = mid_ranks(&[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(r, [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(t, 6.0);
    }

    #[test]
    fn kw_separated_groups() {
        let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let hand = 12.0 / 42.0 * (36.0 / 3.0 + 225.0 / 3.0) - 21.0;
        assert_abs_diff_eq!(r.statistic, hand, epsilon = 1e-12);
        assert_abs_diff_eq!(r.statistic, 3.857, epsilon = 1e-3);
        assert_abs_diff_eq!(r.p_value, 0.0495, epsilon = 5e-4);
        assert_eq!(r.df, 1);
        assert_eq!(r.group_sizes, [3, 3]);
    }

    #[test]
    fn kw_group_order_irrelevant() {
        let a = vec![3.1, 0.2, 5.5, 2.0];
        let b = vec![1.0, 4.4, 9.9];
        let h1 = kruskal_wallis(&[a.clone(), b.clone()]).unwrap().statistic;
        let h2 = kruskal_wallis(&[b, a]).unwrap().statistic;
        assert_abs_diff_eq!(h1, h2, epsilon = 1e-12);
    }

    #[test]
    fn kw_symmetric_ranks_gives_zero() {
        let r = kruskal_wallis(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.0, epsilon = 1e-12);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn kw_errors() {
        assert!(matches!(
            kruskal_wallis(&[vec![1.0, 2.0, 3.0]]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            kruskal_wallis(&[vec![2.0, 2.0], vec![2.0]]),
            Err(Error::DegenerateData(_))
        ));
        assert!(kruskal_wallis(&[vec![1.0], vec![2.0]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0, 2.0], vec![]]).is_err());
    }

    #[test]
    fn mwu_small_exact() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_abs_diff_eq!(r.p_value, 2.0 / 6.0, epsilon = 1e-12);
        assert_eq!(r.method, METHOD_MWU_EXACT);
        assert_eq!(r.effect_size, Some(-1.0));

        let a: Vec<f64> = (1..=5).map(f64::from).collect();
        let b: Vec<f64> = (6..=10).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_abs_diff_eq!(r.p_value, 2.0 / 252.0, epsilon = 1e-12);
    }

    #[test]
    fn mwu_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.statistic, 8.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.method, METHOD_MWU_NORMAL);
    }

    #[test]
    fn mwu_large_uses_normal() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + 10.5).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.method, METHOD_MWU_NORMAL);
        // U counts pairs; here b exceeds a except for the overlap
        let u_a: f64 = a
            .iter()
            .map(|x| b.iter().filter(|y| x > *y).count() as f64)
            .sum();
        assert_eq!(r.statistic, u_a);
        assert!(r.p_value > 0.0 && r.p_value < 0.05);
    }

    #[test]
    fn mwu_constant_pool() {
        let r = mann_whitney_u(&[1.0, 1.0], &[1.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn null_counts_sum_to_binomial() {
        let counts = mwu_null_counts(5, 5);
        assert_eq!(counts.iter().sum::<u64>(), 252);
        assert_eq!(counts.len(), 26);
        assert_eq!(counts[0], 1);
        assert_eq!(mwu_null_counts(3, 0), [1]);
    }

    #[test]
    fn holm_examples() {
        assert_eq!(
            holm_correct(&[0.01, 0.04, 0.03]).unwrap(),
            [0.03, 0.06, 0.06]
        );
        assert_eq!(holm_correct(&[0.2]).unwrap(), [0.2]);
        assert_eq!(holm_correct(&[1.0, 1.0, 1.0]).unwrap(), [1.0, 1.0, 1.0]);
        assert!(holm_correct(&[]).unwrap().is_empty());
        assert!(holm_correct(&[1.5]).is_err());
        assert!(holm_correct(&[f64::NAN]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_abs_diff_eq!(pearson_r(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson_r(&x, &neg).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            pearson_r(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(matches!(
            pearson_r(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5), 2.5);
        assert_eq!(quantile(&s, 0.25), 1.75);
        assert_eq!(quantile(&s, 1.0), 4.0);
    }

    #[test]
    fn kde_symmetric_data() {
        let values: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 })
            .collect();
        let c = kde_density(&values, DEFAULT_KDE_GRID).unwrap();
        let n = c.ys.len();
        for i in 0..n {
            assert_abs_diff_eq!(c.ys[i], c.ys[n - 1 - i], epsilon = 1e-9);
            assert_abs_diff_eq!(c.xs[i], -c.xs[n - 1 - i], epsilon = 1e-9);
        }
        assert_abs_diff_eq!(c.integral(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn kde_degenerate_inputs() {
        assert!(matches!(
            kde_density(&[1.0], 64),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            kde_density(&[2.0, 2.0, 2.0], 64),
            Err(Error::DegenerateData(_))
        ));
        assert!(kde_density(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn kde_bandwidth_is_silverman() {
        let values = [1.0, 2.0, 3.0, 4.0, 10.0];
        let sd = sample_sd(&values);
        let iqr = 4.0 - 2.0;
        let expected = 0.9 * sd.min(iqr / 1.34) * 5f64.powf(-0.2);
        assert_abs_diff_eq!(silverman_bandwidth(&values), expected, epsilon = 1e-12);
    }

    /// All C(m+n, m) placements of the first sample among ranks 1..=m+n.
    fn enumerate_u(m: usize, n: usize) -> Vec<usize> {
        let total = m + n;
        let mut out = Vec::new();
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let rank_sum: usize = (0..total)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| i + 1)
                .sum();
            out.push(rank_sum - m * (m + 1) / 2);
        }
        out
    }

    #[test]
    fn exact_path_matches_enumeration() {
        for m in 1..=6 {
            for n in 1..=6 {
                let all = enumerate_u(m, n);
                for (u, &c) in mwu_null_counts(m, n).iter().enumerate() {
                    assert_eq!(all.iter().filter(|&&x| x == u).count() as u64, c);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn kw_rank_invariant(groups in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 1..8), 2..5)) {
            prop_assume!(groups.iter().map(Vec::len).sum::<usize>() >= 3);
            let Ok(plain) = kruskal_wallis(&groups) else { return Ok(()); };
            let cubed: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v * v * v + 2.0 * v).collect()).collect();
            let t = kruskal_wallis(&cubed).unwrap();
            prop_assert!((plain.statistic - t.statistic).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&plain.p_value));
        }

        #[test]
        fn chi_square_tail_decreasing(df in 1usize..20, x in 0.0f64..60.0, dx in 0.01f64..5.0) {
            prop_assert!(chi_square_sf(x + dx, df) < chi_square_sf(x, df) || chi_square_sf(x, df) == 0.0);
        }

        #[test]
        fn holm_dominates_raw(ps in prop::collection::vec(0.0f64..=1.0, 0..12)) {
            let adj = holm_correct(&ps).unwrap();
            for (a, p) in adj.iter().zip(&ps) {
                prop_assert!(a >= p && *a <= 1.0);
            }
            let mut sorted = ps.clone();
            sorted.sort_by(f64::total_cmp);
            let adj_sorted = holm_correct(&sorted).unwrap();
            prop_assert!(adj_sorted.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn pearson_affine(x in prop::collection::vec(-10.0f64..10.0, 3..20), a in 0.1f64..10.0, b in -10.0f64..10.0) {
            let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v * v + i as f64).collect();
            let Ok(r) = pearson_r(&x, &y) else { return Ok(()); };
            let yt: Vec<f64> = y.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson_r(&x, &yt).unwrap() - r).abs() < 1e-9);
            let yn: Vec<f64> = y.iter().map(|v| -a * v).collect();
            prop_assert!((pearson_r(&x, &yn).unwrap() + r).abs() < 1e-9);
        }

        #[test]
        fn kde_integrates_to_one(values in prop::collection::vec(-100.0f64..100.0, 2..60), grid in 16usize..300) {
            let Ok(c) = kde_density(&values, grid) else { return Ok(()); };
            prop_assert!((c.integral() - 1.0).abs() <= 1e-3);
            prop_assert!(c.ys.iter().all(|&y| y >= 0.0));
            prop_assert!(c.xs.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
