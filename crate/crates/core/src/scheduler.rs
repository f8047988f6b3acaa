//! Home-BS decisions after the coarse scan: RRU-user pairing, power split
//! and stage-2 scan windows.

use std::f64::consts::{PI, TAU};

use crate::beamforming::ScanConfig;
use crate::stats::q_function;
use crate::{Error, Result};

/// Feedback collected after stage 1, indexed `[rru][user]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMatrix {
    values: Vec<Vec<f64>>,
    best_indices: Vec<Vec<usize>>,
}

impl ConfidenceMatrix {
    pub fn new(values: Vec<Vec<f64>>, best_indices: Vec<Vec<usize>>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::invalid("empty confidence matrix"));
        }
        if values.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("confidence matrix must be square"));
        }
        if best_indices.len() != n || best_indices.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(
                "beam-index matrix shape differs from confidences",
            ));
        }
        if values
            .iter()
            .flatten()
            .any(|v| !(*v > 0.0 && v.is_finite()))
        {
            return Err(Error::invalid("confidences must be positive and finite"));
        }
        Ok(ConfidenceMatrix {
            values,
            best_indices,
        })
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn best_indices(&self) -> &[Vec<usize>] {
        &self.best_indices
    }

    pub fn value(&self, n: usize, k: usize) -> f64 {
        self.values[n][k]
    }

    pub fn best_index(&self, n: usize, k: usize) -> usize {
        self.best_indices[n][k]
    }
}

/// `Σ_n ln ξ[n][σ(n)]`, summed in RRU order.
pub fn sum_log_objective(values: &[Vec<f64>], assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(n, &k)| values[n][k].ln())
        .sum()
}

/// Dense O(n³) Hungarian algorithm (shortest augmenting paths with
/// potentials) minimizing `Σ cost[i][σ(i)]`. Returns `σ`.
pub(crate) fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row matched to column j (1-based, 0 = none)
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn assignment_cost(cost: &[Vec<f64>], assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum()
}

/// Minimum cost over assignments of rows `rows` to columns `cols`.
fn sub_min_cost(cost: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    let sub: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| cost[r][c]).collect())
        .collect();
    let a = min_cost_assignment(&sub);
    assignment_cost(&sub, &a)
}

/// Pairs RRUs to users maximizing `Σ_n ln ξ[n][σ(n)]`.
///
/// Among optimal permutations the lexicographically smallest is returned:
/// rows are fixed one by one to the lowest column that still admits an
/// optimal completion.
pub fn schedule(conf: &ConfidenceMatrix) -> Vec<usize> {
    schedule_values(conf.values()).expect("confidence matrix is validated")
}

/// [`schedule`] on a raw matrix, validating shape and positivity.
pub fn schedule_values(values: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = values.len();
    if n == 0 || values.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("assignment needs a non-empty square matrix"));
    }
    if values
        .iter()
        .flatten()
        .any(|v| !(*v > 0.0 && v.is_finite()))
    {
        return Err(Error::invalid(
            "assignment weights must be positive and finite",
        ));
    }
    let cost: Vec<Vec<f64>> = values
        .iter()
        .map(|r| r.iter().map(|v| -v.ln()).collect())
        .collect();
    let optimum = assignment_cost(&cost, &min_cost_assignment(&cost));
    let scale: f64 = cost.iter().flatten().map(|c| c.abs()).sum();
    let tol = 1e-12 * (1.0 + scale);

    let mut assignment = Vec::with_capacity(n);
    let mut free: Vec<usize> = (0..n).collect();
    let mut fixed = 0.0;
    for row in 0..n {
        let rest_rows: Vec<usize> = (row + 1..n).collect();
        let mut chosen = None;
        for (slot, &col) in free.iter().enumerate() {
            let rest_cols: Vec<usize> = free.iter().copied().filter(|&c| c != col).collect();
            let completion = if rest_rows.is_empty() {
                0.0
            } else {
                sub_min_cost(&cost, &rest_rows, &rest_cols)
            };
            if fixed + cost[row][col] + completion <= optimum + tol {
                chosen = Some(slot);
                break;
            }
        }
        // the Hungarian optimum always admits a completion; fall back to the
        // cheapest column if rounding ever says otherwise
        let slot = chosen.unwrap_or_else(|| {
            (0..free.len())
                .min_by(|&a, &b| cost[row][free[a]].total_cmp(&cost[row][free[b]]))
                .unwrap()
        });
        let col = free.remove(slot);
        fixed += cost[row][col];
        assignment.push(col);
    }
    Ok(assignment)
}

/// Fractional transmit power allocation:
/// `p_n = p_sum·ξ_n^{−ν} / Σ_m ξ_m^{−ν}`.
pub fn ftpa_power(rru_conf: &[f64], nu: f64, p_sum: f64) -> Result<Vec<f64>> {
    if rru_conf.is_empty() {
        return Err(Error::invalid("no RRUs to allocate power to"));
    }
    if rru_conf.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::invalid(
            "RRU confidences must be positive and finite",
        ));
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::invalid(format!("decay factor {nu} outside [0, 1]")));
    }
    if !(p_sum > 0.0 && p_sum.is_finite()) {
        return Err(Error::invalid("power budget must be positive"));
    }
    let weights: Vec<f64> = rru_conf.iter().map(|c| c.powf(-nu)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| p_sum * w / total).collect())
}

/// Q-function shaped scan range `π·Q((ξ − μ)/σ)` clamped to
/// `[min_half_range, π]`.
///
/// `sigma = 0` is the step-function limit: `π` below `μ`, `0` above, and
/// `π/2` exactly at `μ` (before clamping).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeControl {
    pub mean: f64,
    pub std_dev: f64,
    pub min_half_range: f64,
}

impl RangeControl {
    pub fn new(mean: f64, std_dev: f64, min_half_range: f64) -> Result<Self> {
        if !mean.is_finite() || !(std_dev >= 0.0) || std_dev.is_nan() {
            return Err(Error::invalid(
                "range control needs finite mean and non-negative std",
            ));
        }
        if !(min_half_range > 0.0 && min_half_range <= PI) {
            return Err(Error::invalid(format!(
                "minimum half range {min_half_range} outside (0, π]"
            )));
        }
        Ok(RangeControl {
            mean,
            std_dev,
            min_half_range,
        })
    }

    /// Unclamped `π·Q((ξ − μ)/σ)`.
    pub fn raw(&self, conf: f64) -> f64 {
        if self.std_dev == 0.0 {
            return if conf < self.mean {
                PI
            } else if conf == self.mean {
                PI / 2.0
            } else {
                0.0
            };
        }
        if self.std_dev.is_infinite() {
            return PI / 2.0;
        }
        PI * q_function((conf - self.mean) / self.std_dev)
    }

    pub fn half_range(&self, conf: f64) -> f64 {
        self.raw(conf).clamp(self.min_half_range, PI)
    }
}

/// Scan half-range for confidence `conf` with floor `min_half_range`
/// (the experiments use `π/C2`).
pub fn scan_range(conf: f64, mu: f64, sigma: f64, min_half_range: f64) -> Result<f64> {
    Ok(RangeControl::new(mu, sigma, min_half_range)?.half_range(conf))
}

/// Everything the home BS sends to the RRUs for stage 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDecision {
    /// `assignment[n]` is the user served by RRU `n`.
    pub assignment: Vec<usize>,
    pub rru_confidence: Vec<f64>,
    pub rru_power_w: Vec<f64>,
    pub stage2_configs: Vec<ScanConfig>,
}

impl ScheduleDecision {
    /// Inverse map: `rru_of_user[k]` serves user `k`.
    pub fn rru_of_user(&self) -> Vec<usize> {
        invert_permutation(&self.assignment)
    }
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Stage-2 parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage2Params {
    pub c1: usize,
    pub c2: usize,
    pub nu: f64,
    pub p_sum_w: f64,
    pub range: RangeControl,
}

/// Per-RRU stage-2 sweeps: centered on the coarse beam `2π·ĉ/C1` of the
/// scheduled user, half-range from the confidence, FTPA power.
pub fn build_stage2(
    conf: &ConfidenceMatrix,
    assignment: &[usize],
    powers: &[f64],
    c1: usize,
    c2: usize,
    range: &RangeControl,
) -> Result<Vec<ScanConfig>> {
    let n = conf.size();
    if assignment.len() != n || powers.len() != n {
        return Err(Error::invalid(
            "assignment/power length differs from RRU count",
        ));
    }
    if c1 == 0 {
        return Err(Error::invalid("stage-1 codebook size must be positive"));
    }
    if c2 < 2 {
        return Err(Error::invalid("stage-2 codebook needs at least two beams"));
    }
    assignment
        .iter()
        .enumerate()
        .map(|(rru, &user)| {
            let center = TAU / c1 as f64 * conf.best_index(rru, user) as f64;
            let half = range.half_range(conf.value(rru, user));
            ScanConfig::new(center, half, c2, powers[rru])
        })
        .collect()
}

/// Full home-BS decision: schedule, FTPA power, stage-2 configs.
pub fn decide(conf: &ConfidenceMatrix, params: &Stage2Params) -> Result<ScheduleDecision> {
    let assignment = schedule(conf);
    let rru_confidence: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(n, &k)| conf.value(n, k))
        .collect();
    let rru_power_w = ftpa_power(&rru_confidence, params.nu, params.p_sum_w)?;
    let stage2_configs = build_stage2(
        conf,
        &assignment,
        &rru_power_w,
        params.c1,
        params.c2,
        &params.range,
    )?;
    Ok(ScheduleDecision {
        assignment,
        rru_confidence,
        rru_power_w,
        stage2_configs,
    })
}
