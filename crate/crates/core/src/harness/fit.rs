//! Power-law rate fits and rank correlation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Divide values by `|log eps|` before fitting.
    pub log_correction: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `log value` against `log eps`; `+inf` if any value is zero.
    pub exponent: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared: f64,
}

/// Least-squares slope of `log |value|` against `log eps`.
pub fn fit_rate(pairs: &[(f64, f64)], options: FitOptions) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::param(
            "pairs",
            format!("need at least 3 points, got {}", pairs.len()),
        ));
    }
    if let Some(&(e, v)) = pairs
        .iter()
        .find(|(e, v)| !(e.is_finite() && *e > 0.0) || !(v.is_finite() && *v >= 0.0))
    {
        return Err(Error::param(
            "pairs",
            format!("non-positive or non-finite point ({e}, {v})"),
        ));
    }
    if pairs.iter().any(|&(_, v)| v == 0.0) {
        return Ok(RateFit {
            exponent: f64::INFINITY,
            r_squared: 1.0,
        });
    }
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .map(|&(e, v)| {
            let v = if options.log_correction {
                v / e.ln().abs()
            } else {
                v
            };
            (e.ln(), v.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("pairs", "all eps values coincide"));
    }
    let slope = sxy / sxx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    Ok(RateFit {
        exponent: slope,
        r_squared: if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy },
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; zero when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman: length mismatch");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_handles_ties_and_order() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), 0.0);
        assert!(
            (spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]) - 0.9486832980505138).abs()
                < 1e-12
        );
    }
}
