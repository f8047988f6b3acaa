//! Aggregation of trial records.
//!
//! Misalignment statistics are integer counts and rate means use a correctly
//! rounded sum, so aggregates do not depend on record order.

use std::collections::BTreeMap;

use serde::Serialize;

use super::runner::TrialRecord;
use crate::protocol::Method;
use crate::stats::{binomial_half_width, ecdf_sorted, exact_sum, quantile_sorted, sorted_copy};
use crate::{Error, Result};

/// One row of `fig3.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Row {
    #[serde(rename = "T")]
    pub pilot_length: usize,
    pub method: Method,
    pub p_mis_sys: f64,
    pub p_mis_sys_ci: f64,
    pub p_mis_user_mean: f64,
    pub trials: usize,
}

/// One row of `fig4.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfRow {
    pub method: Method,
    pub rate_bps_hz: f64,
    pub cdf: f64,
}

/// Full per-(pilot length, method) aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    #[serde(rename = "T")]
    pub pilot_length: usize,
    pub method: Method,
    pub trials: usize,
    pub p_mis_sys: f64,
    pub p_mis_sys_ci: f64,
    pub p_mis_user_mean: f64,
    pub p_mis_user_ci: f64,
    /// `1 − Π_k (1 − P̂_k)` from the per-user estimates.
    pub p_mis_sys_indep: f64,
    pub rate_mean: f64,
    pub rate_p10: f64,
    pub rate_p50: f64,
    pub rate_p90: f64,
    /// Trials whose ZF inverse needed diagonal loading.
    pub zf_regularized: usize,
}

impl SummaryRow {
    pub fn fig3(&self) -> Fig3Row {
        Fig3Row {
            pilot_length: self.pilot_length,
            method: self.method,
            p_mis_sys: self.p_mis_sys,
            p_mis_sys_ci: self.p_mis_sys_ci,
            p_mis_user_mean: self.p_mis_user_mean,
            trials: self.trials,
        }
    }
}

fn group(records: &[TrialRecord]) -> BTreeMap<(usize, Method), Vec<&TrialRecord>> {
    let mut groups: BTreeMap<(usize, Method), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.pilot_length, r.method)).or_default().push(r);
    }
    groups
}

/// Aggregates per (pilot length, method), sorted by pilot length then method.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::invalid("nothing to summarize: no trial records"));
    }
    group(records)
        .into_iter()
        .map(|((pilot_length, method), rows)| {
            let trials = rows.len();
            let users = rows[0].user_misaligned.len();
            if users == 0 || rows.iter().any(|r| r.user_misaligned.len() != users) {
                return Err(Error::invalid(format!(
                    "inconsistent user count in records for T = {pilot_length}, {method}"
                )));
            }
            let sys = rows.iter().filter(|r| r.system_misaligned).count();
            let per_user: Vec<f64> = (0..users)
                .map(|k| rows.iter().filter(|r| r.user_misaligned[k]).count() as f64 / trials as f64)
                .collect();
            let user_total: usize = rows.iter().map(|r| r.user_misaligned.iter().filter(|&&u| u).count()).sum();
            let user_samples = trials * users;
            let p_mis_sys = sys as f64 / trials as f64;
            let p_mis_user_mean = user_total as f64 / user_samples as f64;

            let rates: Vec<f64> = rows.iter().flat_map(|r| r.rates.iter().copied()).collect();
            let sorted = sorted_copy(&rates);
            let (rate_mean, p10, p50, p90) = if sorted.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            } else {
                (
                    exact_sum(rates.iter().copied()) / rates.len() as f64,
                    quantile_sorted(&sorted, 0.1),
                    quantile_sorted(&sorted, 0.5),
                    quantile_sorted(&sorted, 0.9),
                )
            };
            Ok(SummaryRow {
                pilot_length,
                method,
                trials,
                p_mis_sys,
                p_mis_sys_ci: binomial_half_width(p_mis_sys, trials),
                p_mis_user_mean,
                p_mis_user_ci: binomial_half_width(p_mis_user_mean, user_samples),
                p_mis_sys_indep: 1.0 - per_user.iter().map(|p| 1.0 - p).product::<f64>(),
                rate_mean,
                rate_p10: p10,
                rate_p50: p50,
                rate_p90: p90,
                zf_regularized: rows.iter().filter(|r| r.zf_regularized).count(),
            })
        })
        .collect()
}

/// Per-user rate samples of `method` at `pilot_length`, in record order.
pub fn rate_samples(records: &[TrialRecord], pilot_length: usize, method: Method) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.pilot_length == pilot_length && r.method == method)
        .flat_map(|r| r.rates.iter().copied())
        .collect()
}

/// Empirical rate CDFs of every method at `pilot_length` on a shared grid of
/// `points` rates spanning `[0, max rate]`.
pub fn rate_cdf(records: &[TrialRecord], pilot_length: usize, methods: &[Method], points: usize) -> Result<Vec<CdfRow>> {
    if points < 2 {
        return Err(Error::invalid("a CDF grid needs at least two points"));
    }
    let samples: Vec<(Method, Vec<f64>)> = methods
        .iter()
        .map(|&m| (m, sorted_copy(&rate_samples(records, pilot_length, m))))
        .collect();
    if samples.iter().all(|(_, s)| s.is_empty()) {
        return Err(Error::invalid(format!("no rate samples at T = {pilot_length}")));
    }
    let max = samples
        .iter()
        .filter_map(|(_, s)| s.last().copied())
        .fold(0.0f64, f64::max);
    let mut rows = Vec::with_capacity(points * methods.len());
    for (method, sorted) in &samples {
        if sorted.is_empty() {
            continue;
        }
        for i in 0..points {
            // last grid point is exactly the maximum
            let x = if i + 1 == points { max } else { max * i as f64 / (points - 1) as f64 };
            rows.push(CdfRow {
                method: *method,
                rate_bps_hz: x,
                cdf: ecdf_sorted(sorted, x),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: usize, m: Method, trial: u64, users: Vec<bool>, rates: Vec<f64>) -> TrialRecord {
        TrialRecord {
            pilot_length: t,
            method: m,
            trial,
            system_misaligned: users.iter().any(|&u| u),
            user_misaligned: users,
            rates,
            zf_regularized: false,
        }
    }

    #[test]
    fn frequency_and_half_width() {
        let records: Vec<TrialRecord> = (0..100)
            .map(|i| rec(16, Method::Tssa, i, vec![i < 7, false], vec![1.0, 2.0]))
            .collect();
        let s = summarize(&records).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].p_mis_sys, 0.07);
        assert_eq!(s[0].p_mis_sys_ci, 1.96 * (0.07f64 * 0.93 / 100.0).sqrt());
        assert_eq!(s[0].p_mis_user_mean, 7.0 / 200.0);
        assert!((s[0].p_mis_sys_indep - 0.07).abs() < 1e-15);
        assert_eq!(s[0].rate_mean, 1.5);
    }

    #[test]
    fn independence_formula_uses_per_user_rates() {
        // user 0 misaligned in half, user 1 in a disjoint quarter
        let records: Vec<TrialRecord> = (0..4)
            .map(|i| rec(16, Method::Tssa, i, vec![i < 2, i == 3], vec![]))
            .collect();
        let s = &summarize(&records).unwrap()[0];
        assert_eq!(s.p_mis_sys, 0.75);
        assert!((s.p_mis_sys_indep - (1.0 - 0.5 * 0.75)).abs() < 1e-15);
    }

    #[test]
    fn order_does_not_matter() {
        let mut records: Vec<TrialRecord> = (0..50)
            .flat_map(|i| {
                [Method::Tssa, Method::OsesCentralized]
                    .into_iter()
                    .map(move |m| rec(64, m, i, vec![i % 3 == 0], vec![0.1 * i as f64 + 1e-9]))
            })
            .collect();
        let a = summarize(&records).unwrap();
        records.reverse();
        assert_eq!(a, summarize(&records).unwrap());
        assert_eq!(a[0].method, Method::Tssa);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn cdf_grid_shape() {
        let records = vec![
            rec(1024, Method::Tssa, 0, vec![false], vec![1.0, 3.0]),
            rec(1024, Method::OsesDistributed, 0, vec![false], vec![0.5, 2.0]),
        ];
        let rows = rate_cdf(&records, 1024, &[Method::Tssa, Method::OsesDistributed], 200).unwrap();
        assert_eq!(rows.len(), 400);
        assert_eq!(rows[0].rate_bps_hz, 0.0);
        assert_eq!(rows[199].rate_bps_hz, 3.0);
        assert_eq!(rows[199].cdf, 1.0);
        assert_eq!(rows[399].cdf, 1.0);
        assert!(rows.windows(2).take(199).all(|w| w[0].cdf <= w[1].cdf && w[0].rate_bps_hz < w[1].rate_bps_hz));
        assert!(rate_cdf(&records, 16, &[Method::Tssa], 200).is_err());
    }
}
