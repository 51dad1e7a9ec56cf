//! Predictive goodness-of-fit indexes, posterior K_n, co-clustering and
//! Binder point estimates.
//!
//! Writing f̂_s(y_i) = Σ_j P_j^{(s)} f(y_i; τ_j^{(s)}) for the mixture density of
//! kept sweep s at datum i, S for the number of sweeps and
//! lppd = Σ_i ln(S⁻¹ Σ_s f̂_s(y_i)):
//!
//! * CPO_i = (S⁻¹ Σ_s 1/f̂_s(y_i))⁻¹ and LPML = Σ_i ln CPO_i;
//! * WAIC₁ = lppd − 2 Σ_i (ln f̄_i − S⁻¹ Σ_s ln f̂_s(y_i));
//! * WAIC₂ = lppd − Σ_i var_s ln f̂_s(y_i), with the S − 1 variance.
//!
//! Both WAIC values are on the log predictive density scale, the same scale as
//! LPML. SSE and SSAE compare y_i with the posterior mean and variance of
//! the kernel that datum i is allocated to.

use crate::archive::{fmt_real, Archive};
use crate::data::Dataset;
use crate::models::MixtureModel;
use crate::par::{map_range, Execution};
use crate::{Error, Result};

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + v.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// ln f̂_s(y) for one sweep.
pub fn ln_mixture_density<M: MixtureModel>(
    model: &M,
    sweep: &crate::archive::SweepRecord<M::Location, M::Global>,
    y: f64,
    x: &[f64],
) -> f64 {
    let lt = sweep.total_mass.ln();
    log_sum_exp(
        sweep
            .jumps
            .iter()
            .zip(&sweep.locations)
            .map(|(j, loc)| j.ln() - lt + model.log_kernel(y, x, loc, &sweep.global)),
    )
}

/// Predictive indexes of a posterior sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FitIndexes {
    pub sse: f64,
    pub ssae: f64,
    pub lpml: f64,
    pub waic1: f64,
    pub waic2: f64,
    pub lppd: f64,
    pub p_waic1: f64,
    pub p_waic2: f64,
    pub cpo: Vec<f64>,
}

pub fn predictive_indexes<M: MixtureModel>(
    archive: &Archive<M::Location, M::Global>,
    data: &Dataset,
    model: &M,
    exec: Execution,
) -> Result<FitIndexes> {
    let s_count = archive.len();
    if s_count < 2 {
        return Err(Error::domain(format!(
            "predictive indexes need at least 2 sweeps, got {s_count}"
        )));
    }
    if archive.n_obs() != data.len() {
        return Err(Error::domain(format!(
            "archive has {} observations, data has {}",
            archive.n_obs(),
            data.len()
        )));
    }
    let s = s_count as f64;
    // Per datum: (ln f̄, mean ln f̂, var ln f̂, ln CPO, fitted mean, fitted variance).
    let rows = map_range(exec, data.len(), |i| {
        let (y, x) = (data.y[i], &data.x[i]);
        let lf: Vec<f64> = archive
            .sweeps
            .iter()
            .map(|sw| ln_mixture_density(model, sw, y, x))
            .collect();
        let ln_mean = log_sum_exp(lf.iter().copied()) - s.ln();
        let mean_ln = lf.iter().sum::<f64>() / s;
        let var_ln = lf.iter().map(|l| (l - mean_ln).powi(2)).sum::<f64>() / (s - 1.0);
        let ln_cpo = -(log_sum_exp(lf.iter().map(|l| -l)) - s.ln());
        let (mut m1, mut m2, mut v) = (0.0, 0.0, 0.0);
        for sw in &archive.sweeps {
            let c = sw.allocations[i] as usize;
            let (mu, var) = model.kernel_moments(x, &sw.locations[c], &sw.global);
            m1 += mu;
            m2 += mu * mu;
            v += var;
        }
        let fit_mean = m1 / s;
        let fit_var = v / s + (m2 / s - fit_mean * fit_mean).max(0.0);
        (ln_mean, mean_ln, var_ln, ln_cpo, fit_mean, fit_var)
    });
    if let Some(i) = rows.iter().position(|r| !r.3.is_finite()) {
        return Err(Error::Accuracy {
            what: format!("CPO of observation {i} is not finite"),
            estimate: rows[i].3,
            error_bound: f64::INFINITY,
        });
    }
    let lppd: f64 = rows.iter().map(|r| r.0).sum();
    let p1: f64 = 2.0 * rows.iter().map(|r| r.0 - r.1).sum::<f64>();
    let p2: f64 = rows.iter().map(|r| r.2).sum();
    let sse = rows.iter().zip(&data.y).map(|(r, y)| (y - r.4).powi(2)).sum();
    let ssae = rows
        .iter()
        .zip(&data.y)
        .map(|(r, y)| (y - r.4).abs() / r.5.sqrt())
        .sum();
    Ok(FitIndexes {
        sse,
        ssae,
        lpml: rows.iter().map(|r| r.3).sum(),
        waic1: lppd - p1,
        waic2: lppd - p2,
        lppd,
        p_waic1: p1,
        p_waic2: p2,
        cpo: rows.iter().map(|r| r.3.exp()).collect(),
    })
}

/// Empirical posterior of K_n as (k, frequency) pairs for k = 1..=max.
pub fn kn_posterior<L, G>(archive: &Archive<L, G>) -> Vec<(usize, f64)> {
    let max = archive.sweeps.iter().map(|s| s.k()).max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for s in &archive.sweeps {
        counts[s.k()] += 1;
    }
    let total = archive.len() as f64;
    (1..=max).map(|k| (k, counts[k] as f64 / total)).collect()
}

pub fn kn_mode(post: &[(usize, f64)]) -> usize {
    post.iter()
        .fold((0, -1.0), |acc, &(k, p)| if p > acc.1 { (k, p) } else { acc })
        .0
}

/// Posterior co-clustering matrix π̂_ij, row-major n × n.
pub fn coclustering<L, G>(archive: &Archive<L, G>) -> Vec<f64> {
    let n = archive.n_obs();
    let mut pi = vec![0.0; n * n];
    for s in &archive.sweeps {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); s.k()];
        for (i, &c) in s.allocations.iter().enumerate() {
            members[c as usize].push(i);
        }
        for m in &members {
            for &a in m {
                for &b in m {
                    pi[a * n + b] += 1.0;
                }
            }
        }
    }
    let total = archive.len() as f64;
    pi.iter_mut().for_each(|v| *v /= total);
    pi
}

/// Binder loss of a partition against π̂, with cost `loss_ratio` for placing
/// a pair together and 1 for splitting it:
/// Σ_{i<j} [𝟙(c_i=c_j)(1−π̂_ij)·loss_ratio + 𝟙(c_i≠c_j)π̂_ij].
pub fn binder_loss(partition: &[u32], pi: &[f64], loss_ratio: f64) -> f64 {
    let n = partition.len();
    let mut loss = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let p = pi[i * n + j];
            loss += if partition[i] == partition[j] {
                loss_ratio * (1.0 - p)
            } else {
                p
            };
        }
    }
    loss
}

/// Relabels clusters by order of first appearance.
pub fn canonical_labels(partition: &[u32]) -> Vec<u32> {
    let mut map: Vec<(u32, u32)> = Vec::new();
    partition
        .iter()
        .map(|&c| match map.iter().find(|(old, _)| *old == c) {
            Some(&(_, new)) => new,
            None => {
                let new = map.len() as u32;
                map.push((c, new));
                new
            }
        })
        .collect()
}

/// The visited partition with the smallest Binder loss (ties go to the
/// earliest sweep), in canonical labels.
pub fn binder_partition<L, G>(archive: &Archive<L, G>, loss_ratio: f64, exec: Execution) -> Result<Vec<u32>> {
    if archive.is_empty() {
        return Err(Error::domain("Binder estimate needs a non-empty archive"));
    }
    if !(loss_ratio > 0.0) {
        return Err(Error::domain(format!("loss ratio must be positive, got {loss_ratio}")));
    }
    let pi = coclustering(archive);
    let mut candidates: Vec<Vec<u32>> = archive
        .sweeps
        .iter()
        .map(|s| canonical_labels(&s.allocations))
        .collect();
    candidates.sort();
    candidates.dedup();
    let losses = map_range(exec, candidates.len(), |c| binder_loss(&candidates[c], &pi, loss_ratio));
    // Earliest visited among the minimizers, for a result independent of sorting.
    let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let first = archive
        .sweeps
        .iter()
        .map(|s| canonical_labels(&s.allocations))
        .find(|p| {
            let idx = candidates.binary_search(p).expect("candidate present");
            losses[idx] == best
        })
        .expect("a minimizer exists");
    Ok(first)
}

/// Rand index between two labelings.
pub fn rand_index(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len();
    let mut agree = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        agree as f64 / total as f64
    }
}

/// Pointwise posterior mean and 5%/95% quantiles of the predictive density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityBand {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn predictive_density_grid<M: MixtureModel>(
    archive: &Archive<M::Location, M::Global>,
    model: &M,
    grid: &[f64],
    x: &[f64],
    exec: Execution,
) -> Result<DensityBand> {
    if grid.is_empty() {
        return Err(Error::domain("density grid is empty"));
    }
    if archive.is_empty() {
        return Err(Error::domain("density grid needs a non-empty archive"));
    }
    let cols = map_range(exec, grid.len(), |g| {
        let mut v: Vec<f64> = archive
            .sweeps
            .iter()
            .map(|s| ln_mixture_density(model, s, grid[g], x).exp())
            .collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.sort_by(f64::total_cmp);
        (mean, quantile_sorted(&v, 0.05), quantile_sorted(&v, 0.95))
    });
    Ok(DensityBand {
        grid: grid.to_vec(),
        mean: cols.iter().map(|c| c.0).collect(),
        q05: cols.iter().map(|c| c.1).collect(),
        q95: cols.iter().map(|c| c.2).collect(),
    })
}

/// Trapezoid ∫|f − g| over the grid.
pub fn l1_distance(grid: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let d: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a - b).abs()).collect();
    trapezoid(grid, &d)
}

pub fn trapezoid(grid: &[f64], v: &[f64]) -> f64 {
    grid.windows(2)
        .zip(v.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Everything `diagnose` reports.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub n_sweeps: usize,
    pub indexes: FitIndexes,
    pub kn_posterior: Vec<(usize, f64)>,
    pub binder_partition: Vec<u32>,
}

pub fn fit_report<M: MixtureModel>(
    archive: &Archive<M::Location, M::Global>,
    data: &Dataset,
    model: &M,
    loss_ratio: f64,
    exec: Execution,
) -> Result<FitReport> {
    Ok(FitReport {
        n_sweeps: archive.len(),
        indexes: predictive_indexes(archive, data, model, exec)?,
        kn_posterior: kn_posterior(archive),
        binder_partition: binder_partition(archive, loss_ratio, exec)?,
    })
}

impl FitReport {
    /// `key = value` text; per-datum CPOs, the K_n posterior and the Binder
    /// partition go to CSV files alongside.
    pub fn to_text(&self) -> String {
        let i = &self.indexes;
        let mut s = String::new();
        for (k, v) in [
            ("sse", i.sse),
            ("ssae", i.ssae),
            ("lpml", i.lpml),
            ("waic1", i.waic1),
            ("waic2", i.waic2),
            ("lppd", i.lppd),
            ("p_waic1", i.p_waic1),
            ("p_waic2", i.p_waic2),
        ] {
            s.push_str(&format!("{k} = {}\n", fmt_real(v)));
        }
        s.push_str(&format!("n_sweeps = {}\n", self.n_sweeps));
        s.push_str(&format!("kn_mode = {}\n", kn_mode(&self.kn_posterior)));
        let kn_mean: f64 = self.kn_posterior.iter().map(|(k, p)| *k as f64 * p).sum();
        s.push_str(&format!("kn_mean = {}\n", fmt_real(kn_mean)));
        let binder_k = self.binder_partition.iter().max().map_or(0, |m| m + 1);
        s.push_str(&format!("binder_clusters = {binder_k}\n"));
        s
    }

    pub fn cpo_csv(&self) -> String {
        let mut s = String::from("obs,cpo\n");
        for (i, c) in self.indexes.cpo.iter().enumerate() {
            s.push_str(&format!("{},{}\n", i + 1, fmt_real(*c)));
        }
        s
    }

    pub fn kn_csv(&self) -> String {
        let mut s = String::from("k,probability\n");
        for (k, p) in &self.kn_posterior {
            s.push_str(&format!("{k},{}\n", fmt_real(*p)));
        }
        s
    }

    pub fn binder_csv(&self) -> String {
        let mut s = String::from("obs,cluster\n");
        for (i, c) in self.binder_partition.iter().enumerate() {
            s.push_str(&format!("{},{c}\n", i + 1));
        }
        s
    }
}

pub fn coclustering_csv(pi: &[f64], n: usize) -> String {
    let mut s = String::new();
    let header: Vec<String> = (1..=n).map(|i| format!("o{i}")).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for row in pi.chunks(n) {
        let r: Vec<String> = row.iter().map(|v| fmt_real(*v)).collect();
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn density_csv(band: &DensityBand) -> String {
    let mut s = String::from("y,mean,q05,q95\n");
    for i in 0..band.grid.len() {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_real(band.grid[i]),
            fmt_real(band.mean[i]),
            fmt_real(band.q05[i]),
            fmt_real(band.q95[i])
        ));
    }
    s
}
