//! Wilson score intervals and a chi-square independence test for the game
//! reports.

use serde::{Deserialize, Serialize};

/// z for a 95% two-sided interval.
const Z95: f64 = 1.959963984540054;

/// Trial statistics with the 95% Wilson score interval. The interval always
/// contains the point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub trials: u64,
    pub successes: u64,
    pub accuracy: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl StatReport {
    pub fn from_counts(successes: u64, trials: u64) -> StatReport {
        assert!(trials >= 1, "a report needs at least one trial");
        assert!(successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = (Z95 / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        // The score interval contains p by construction; keep that exact
        // under floating-point rounding at p = 0 and p = 1.
        StatReport {
            trials,
            successes,
            accuracy: p,
            wilson_low: (center - half).max(0.0).min(p),
            wilson_high: (center + half).min(1.0).max(p),
        }
    }

    pub fn interval_contains(&self, value: f64) -> bool {
        self.wilson_low <= value && value <= self.wilson_high
    }
}

/// Chi-square independence test over a contingency table (rows: hidden
/// choice, columns: observed category).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub table: Vec<Vec<u64>>,
}

pub fn chi_square_independence(table: &[Vec<u64>]) -> ChiSquareReport {
    let rows = table.len();
    let cols = table.first().map(|r| r.len()).unwrap_or(0);
    let row_totals: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<u64> = (0..cols)
        .map(|c| table.iter().map(|r| r[c]).sum())
        .collect();
    let total: u64 = row_totals.iter().sum();
    let live_rows = row_totals.iter().filter(|&&t| t > 0).count();
    let live_cols = col_totals.iter().filter(|&&t| t > 0).count();
    if total == 0 || live_rows < 2 || live_cols < 2 {
        return ChiSquareReport {
            statistic: 0.0,
            degrees_of_freedom: 0,
            p_value: 1.0,
            table: table.to_vec(),
        };
    }
    let mut stat = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            if row_totals[r] == 0 || col_totals[c] == 0 {
                continue;
            }
            let expected = row_totals[r] as f64 * col_totals[c] as f64 / total as f64;
            let diff = table[r][c] as f64 - expected;
            stat += diff * diff / expected;
        }
    }
    let df = ((live_rows - 1) * (live_cols - 1)) as u64;
    ChiSquareReport {
        statistic: stat,
        degrees_of_freedom: df,
        p_value: chi_square_sf(stat, df),
        table: table.to_vec(),
    }
}

/// Survival function of the chi-square distribution: P(X ≥ x) with `df`
/// degrees of freedom, via the regularized upper incomplete gamma Q(df/2,
/// x/2).
pub fn chi_square_sf(x: f64, df: u64) -> f64 {
    if df == 0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(df as f64 / 2.0, x / 2.0)
}

/// ln Γ(x) by the Lanczos approximation.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEFFS {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Regularized upper incomplete gamma Q(a, x): series for x < a + 1,
/// continued fraction otherwise.
fn gamma_q(a: f64, x: f64) -> f64 {
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_contains_the_estimate() {
        for (s, n) in [
            (0u64, 10u64),
            (5, 10),
            (10, 10),
            (4999, 10000),
            (9_999, 10_000),
        ] {
            let r = StatReport::from_counts(s, n);
            assert!(r.interval_contains(r.accuracy));
            assert!(r.wilson_low <= r.wilson_high);
            assert!((0.0..=1.0).contains(&r.wilson_low));
            assert!((0.0..=1.0).contains(&r.wilson_high));
        }
    }

    #[test]
    fn wilson_width_at_ten_thousand_trials_is_about_one_percent() {
        let r = StatReport::from_counts(5000, 10_000);
        let half = (r.wilson_high - r.wilson_low) / 2.0;
        assert!((half - 0.0098).abs() < 0.0005, "half width {half}");
    }

    #[test]
    fn chi_square_sf_matches_textbook_quantiles() {
        // 95th percentile values: 3.841 (df 1), 7.815 (df 3), 9.488 (df 4).
        assert!((chi_square_sf(3.841458820694124, 1) - 0.05).abs() < 1e-9);
        assert!((chi_square_sf(7.814727903251179, 3) - 0.05).abs() < 1e-9);
        assert!((chi_square_sf(9.487729036781154, 4) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn independent_table_has_high_p() {
        let table = vec![vec![500, 510, 490, 505], vec![505, 495, 500, 495]];
        let r = chi_square_independence(&table);
        assert!(r.p_value > 0.5, "p = {}", r.p_value);
    }

    #[test]
    fn dependent_table_has_tiny_p() {
        let table = vec![vec![900, 100], vec![100, 900]];
        let r = chi_square_independence(&table);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn degenerate_table_reports_p_one() {
        let table = vec![vec![1000, 0], vec![0, 0]];
        let r = chi_square_independence(&table);
        assert_eq!(r.degrees_of_freedom, 0);
        assert_eq!(r.p_value, 1.0);
    }
}
