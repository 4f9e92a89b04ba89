//! Two-sample significance testing and effect size.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Exact enumeration is used while both samples have at most this many values.
pub const EXACT_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `values`; tied values share the average of their ranks.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    Ok(())
}

fn pooled_ranks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all = Vec::with_capacity(a.len() + b.len());
    all.extend_from_slice(a);
    all.extend_from_slice(b);
    midranks(&all)
}

/// Mann-Whitney U test, two-sided.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let (m, n) = (a.len(), b.len());
    let ranks = pooled_ranks(a, b);
    let r1: f64 = ranks[..m].iter().sum();
    let u = r1 - (m * (m + 1)) as f64 / 2.0;
    let centre = (m * n) as f64 / 2.0;

    if m <= EXACT_MAX && n <= EXACT_MAX {
        // Every way of drawing m of the pooled midranks is equally likely
        // under the null, ties included.
        let observed = (u - centre).abs() - 1e-9;
        let total = m + n;
        let mut extreme = 0u64;
        let mut count = 0u64;
        for mask in 0u32..(1u32 << total) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let rs: f64 = (0..total).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            let us = rs - (m * (m + 1)) as f64 / 2.0;
            count += 1;
            if (us - centre).abs() >= observed {
                extreme += 1;
            }
        }
        return Ok(MannWhitney { u, p: extreme as f64 / count as f64, exact: true });
    }

    mann_whitney_normal(a, b)
}

/// Mann-Whitney U with the tie- and continuity-corrected normal
/// approximation regardless of sample size.
pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    check(a, b)?;
    let (m, n) = (a.len(), b.len());
    let ranks = pooled_ranks(a, b);
    let r1: f64 = ranks[..m].iter().sum();
    let u = r1 - (m * (m + 1)) as f64 / 2.0;
    let centre = (m * n) as f64 / 2.0;
    let total = (m + n) as f64;
    let mut sorted = ranks;
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = (m * n) as f64 / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let z = ((u - centre).abs() - 0.5).max(0.0) / math::sqrt(var);
    let p = math::erfc(z / core::f64::consts::SQRT_2).min(1.0);
    Ok(MannWhitney { u, p, exact: false })
}

/// Vargha-Delaney A12: probability that a value from `a` exceeds one from
/// `b`, counting ties as one half.
pub fn a12(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, b)?;
    let (m, n) = (a.len() as f64, b.len() as f64);
    let ranks = pooled_ranks(a, b);
    let r1: f64 = ranks[..a.len()].iter().sum();
    Ok((r1 / m - (m + 1.0) / 2.0) / n)
}

/// Bonferroni-adjusted p-values for a family of `p`.
pub fn bonferroni(p: &[f64]) -> Vec<f64> {
    let k = p.len() as f64;
    p.iter().map(|v| (v * k).min(1.0)).collect()
}
