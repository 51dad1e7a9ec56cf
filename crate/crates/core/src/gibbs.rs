//! Blocked Gibbs sampler for ε-NormCRM mixtures.
//!
//! One sweep updates, in order: the latent u, the allocations, optionally ε,
//! the number of non-allocated jumps, all jumps, all locations, and the
//! model's shared parameters. Jumps are tilted by a single factor e^{−uJ}.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::archive::{Archive, SweepRecord};
use crate::crm::{degraded_draws, Intensity, JumpSampler, PriorSampler, TruncationSpec};
use crate::data::Dataset;
use crate::eppf::ln_eppf_integrand;
use crate::models::MixtureModel;
use crate::par::{map_range, substream, Execution};
use crate::{Error, Result};

/// Lower guard on u.
const U_FLOOR: f64 = 1e-300;

/// Prior on ε when it is updated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EpsilonPrior {
    /// ε stays at its configured value.
    #[default]
    Fixed,
    /// Density ∝ 1/ε on [lo, hi].
    LogUniform { lo: f64, hi: f64 },
    /// Flat on [lo, hi].
    Uniform { lo: f64, hi: f64 },
}

impl EpsilonPrior {
    pub fn ln_density(&self, eps: f64) -> f64 {
        match *self {
            EpsilonPrior::Fixed => 0.0,
            EpsilonPrior::LogUniform { lo, hi } if eps >= lo && eps <= hi => -eps.ln() - (hi / lo).ln(),
            EpsilonPrior::Uniform { lo, hi } if eps >= lo && eps <= hi => -(hi - lo).ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    fn validate(&self, errors: &mut Vec<String>) {
        match *self {
            EpsilonPrior::Fixed => {}
            EpsilonPrior::LogUniform { lo, hi } | EpsilonPrior::Uniform { lo, hi } => {
                if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                    errors.push(format!(
                        "ε prior support must satisfy 0 < lo < hi < ∞, got [{lo}, {hi}]"
                    ));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// ⌈√n⌉ clusters of consecutive response quantiles.
    #[default]
    Quantiles,
    /// All observations in one cluster.
    SingleCluster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_burnin: usize,
    pub n_samples: usize,
    pub thinning: usize,
    pub seed: u64,
    /// Substream index, so that chains sharing a seed stay independent.
    pub stream: u64,
    pub intensity: Intensity,
    pub trunc: TruncationSpec,
    pub epsilon_prior: EpsilonPrior,
    /// Half-width of the log-scale random-walk proposal for ε.
    pub epsilon_step: f64,
    pub init: InitStrategy,
    pub exec: Execution,
}

impl ChainConfig {
    pub fn new(intensity: Intensity, trunc: TruncationSpec) -> Self {
        ChainConfig {
            n_burnin: 1000,
            n_samples: 1000,
            thinning: 1,
            seed: 1,
            stream: 0,
            intensity,
            trunc,
            epsilon_prior: EpsilonPrior::Fixed,
            epsilon_step: 0.5,
            init: InitStrategy::Quantiles,
            exec: Execution::default(),
        }
    }

    /// Lists every problem at once.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.n_samples == 0 {
            errors.push("n_samples must be positive".to_string());
        }
        if self.thinning == 0 {
            errors.push("thinning must be at least 1".to_string());
        }
        if !(self.trunc.epsilon > 0.0) {
            errors.push(format!("ε must be positive, got {}", self.trunc.epsilon));
        }
        if !(self.trunc.kappa > 0.0) {
            errors.push(format!("κ must be positive, got {}", self.trunc.kappa));
        }
        self.epsilon_prior.validate(&mut errors);
        if let EpsilonPrior::LogUniform { lo, hi } | EpsilonPrior::Uniform { lo, hi } = self.epsilon_prior {
            if !(self.trunc.epsilon >= lo && self.trunc.epsilon <= hi) {
                errors.push(format!(
                    "initial ε = {} lies outside the prior support [{lo}, {hi}]",
                    self.trunc.epsilon
                ));
            }
        }
        if !(self.epsilon_step > 0.0) {
            errors.push(format!("ε proposal step must be positive, got {}", self.epsilon_step));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn total_sweeps(&self) -> usize {
        self.n_burnin + self.thinning * self.n_samples
    }
}

/// Sampler state. Atoms `0..k` are allocated (cluster i has size
/// `sizes[i]`), atoms `k..` are non-allocated.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState<L, G> {
    pub u: f64,
    pub epsilon: f64,
    pub allocations: Vec<usize>,
    pub sizes: Vec<u32>,
    pub jumps: Vec<f64>,
    pub locations: Vec<L>,
    pub global: G,
    /// Drawn by [`step_n_nonallocated`], realized by [`step_jumps`].
    pub n_na: usize,
    pub iteration: usize,
}

impl<L: Clone, G: Clone> GibbsState<L, G> {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.jumps.iter().sum()
    }

    /// Checks the sweep invariants.
    pub fn check(&self, n: usize) -> Result<()> {
        let fail = |msg: String| {
            Err(Error::Chain {
                sweep: self.iteration,
                msg,
            })
        };
        let k = self.k();
        if k == 0 || self.allocations.len() != n {
            return fail(format!("k = {k}, {} allocations for n = {n}", self.allocations.len()));
        }
        if self.sizes.iter().map(|&s| s as usize).sum::<usize>() != n || self.sizes.contains(&0) {
            return fail(format!("cluster sizes {:?} do not partition n = {n}", self.sizes));
        }
        let mut counted = vec![0u32; k];
        for &c in &self.allocations {
            if c >= k {
                return fail(format!("allocation {c} outside the {k} allocated atoms"));
            }
            counted[c] += 1;
        }
        if counted != self.sizes {
            return fail("cluster sizes disagree with allocations".into());
        }
        if self.jumps.len() != k + self.n_na || self.locations.len() != self.jumps.len() {
            return fail(format!(
                "{} jumps and {} locations for k = {k}, N_na = {}",
                self.jumps.len(),
                self.locations.len(),
                self.n_na
            ));
        }
        if let Some(j) = self.jumps.iter().find(|&&j| !(j > self.epsilon) || !j.is_finite()) {
            return fail(format!("jump {j} not above ε = {}", self.epsilon));
        }
        let t = self.total_mass();
        let wsum: f64 = self.jumps.iter().map(|j| j / t).sum();
        if !(t > 0.0) || (wsum - 1.0).abs() > 1e-12 {
            return fail(format!("weights sum to {wsum}"));
        }
        if !(self.u > 0.0 && self.u.is_finite()) {
            return fail(format!("u = {}", self.u));
        }
        Ok(())
    }

    pub fn record(&self) -> SweepRecord<L, G> {
        SweepRecord {
            iteration: self.iteration,
            u: self.u,
            epsilon: self.epsilon,
            total_mass: self.total_mass(),
            global: self.global.clone(),
            jumps: self.jumps.clone(),
            locations: self.locations.clone(),
            cluster_sizes: self.sizes.clone(),
            allocations: self.allocations.iter().map(|&c| c as u32).collect(),
        }
    }
}

/// u | rest ~ gamma(n, T_ε).
pub fn step_u<L: Clone, G: Clone, R: Rng + ?Sized>(state: &mut GibbsState<L, G>, rng: &mut R) {
    let n = state.allocations.len() as f64;
    let t = state.total_mass();
    let g = Gamma::new(n, 1.0 / t).expect("positive shape and rate");
    state.u = g.sample(rng).max(U_FLOOR);
}

/// Index drawn from weights ∝ exp(lw) using the uniform `v`, in log space.
pub fn draw_log_weighted(lw: &[f64], v: f64) -> Option<usize> {
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let total: f64 = lw.iter().map(|w| (w - max).exp()).sum();
    let target = v * total;
    let mut acc = 0.0;
    let mut last = None;
    for (j, w) in lw.iter().enumerate() {
        let p = (w - max).exp();
        if p > 0.0 {
            last = Some(j);
        }
        acc += p;
        if acc > target && p > 0.0 {
            return Some(j);
        }
    }
    last
}

/// Allocations: P(c_i = j) ∝ J_j f(y_i; τ_j). Atoms left empty become
/// non-allocated; the survivors keep their relative order.
pub fn step_allocations<M: MixtureModel, R: Rng + ?Sized>(
    state: &mut GibbsState<M::Location, M::Global>,
    data: &Dataset,
    model: &M,
    exec: Execution,
    rng: &mut R,
) -> Result<()> {
    let n = data.len();
    let uniforms: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let ln_j: Vec<f64> = state.jumps.iter().map(|j| j.ln()).collect();
    let locs = &state.locations;
    let global = &state.global;
    let draws = map_range(exec, n, |i| {
        let lw: Vec<f64> = ln_j
            .iter()
            .zip(locs)
            .map(|(lj, loc)| {
                let v = lj + model.log_kernel(data.y[i], &data.x[i], loc, global);
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            })
            .collect();
        draw_log_weighted(&lw, uniforms[i])
    });
    let mut counts = vec![0u32; state.jumps.len()];
    let mut alloc = Vec::with_capacity(n);
    for (i, d) in draws.into_iter().enumerate() {
        match d {
            Some(j) => {
                counts[j] += 1;
                alloc.push(j);
            }
            None => {
                return Err(Error::Chain {
                    sweep: state.iteration,
                    msg: format!(
                        "observation {i} (y = {}) has zero kernel value at every atom",
                        data.y[i]
                    ),
                })
            }
        }
    }
    // Occupied atoms first, then the rest.
    let order: Vec<usize> = (0..counts.len())
        .filter(|&j| counts[j] > 0)
        .chain((0..counts.len()).filter(|&j| counts[j] == 0))
        .collect();
    let mut relabel = vec![0; counts.len()];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let k = counts.iter().filter(|&&c| c > 0).count();
    state.jumps = order.iter().map(|&j| state.jumps[j]).collect();
    state.locations = order.iter().map(|&j| state.locations[j].clone()).collect();
    state.sizes = order[..k].iter().map(|&j| counts[j]).collect();
    state.allocations = alloc.into_iter().map(|j| relabel[j]).collect();
    state.n_na = state.jumps.len() - k;
    Ok(())
}

/// Draw from (Λ/(Λ+k)) 𝒫₁(Λ) + (k/(Λ+k)) 𝒫₀(Λ), where 𝒫₁ is the Poisson law
/// shifted to {1, 2, …}.
pub fn sample_n_nonallocated<R: Rng + ?Sized>(lambda_u: f64, k: usize, rng: &mut R) -> usize {
    if !(lambda_u > 0.0) {
        return 0;
    }
    let base = Poisson::new(lambda_u).expect("positive finite rate").sample(rng) as usize;
    let shifted = rng.random::<f64>() * (lambda_u + k as f64) < lambda_u;
    base + shifted as usize
}

pub fn step_n_nonallocated<L: Clone, G: Clone, R: Rng + ?Sized>(
    state: &mut GibbsState<L, G>,
    intensity: &Intensity,
    kappa: f64,
    rng: &mut R,
) -> Result<()> {
    let lambda_u = intensity.ln_tilted_moment(kappa, state.epsilon, state.u, 0)?.exp();
    state.n_na = sample_n_nonallocated(lambda_u, state.k(), rng);
    Ok(())
}

/// Allocated jump i from ∝ J^{n_i} e^{−uJ} ρ(J) on (ε, ∞); `n_na`
/// non-allocated jumps iid from ∝ e^{−uJ} ρ(J) on (ε, ∞).
///
/// Leaves `locations` shorter or longer than `jumps` until
/// [`step_locations`] runs.
pub fn step_jumps<L: Clone, G: Clone, R: Rng + ?Sized>(
    state: &mut GibbsState<L, G>,
    intensity: &Intensity,
    rng: &mut R,
) -> Result<()> {
    let k = state.k();
    let mut samplers: Vec<(u32, JumpSampler)> = Vec::new();
    for i in 0..k {
        let m = state.sizes[i];
        let pos = match samplers.iter().position(|(p, _)| *p == m) {
            Some(p) => p,
            None => {
                samplers.push((m, JumpSampler::new(intensity, state.epsilon, state.u, m)?));
                samplers.len() - 1
            }
        };
        state.jumps[i] = samplers[pos].1.sample(rng);
    }
    state.jumps.truncate(k);
    if state.n_na > 0 {
        let s = JumpSampler::new(intensity, state.epsilon, state.u, 0)?;
        state.jumps.extend((0..state.n_na).map(|_| s.sample(rng)));
    }
    Ok(())
}

/// Allocated locations from their cluster posteriors, non-allocated ones
/// from P₀.
pub fn step_locations<M: MixtureModel, R: Rng + ?Sized>(
    state: &mut GibbsState<M::Location, M::Global>,
    data: &Dataset,
    model: &M,
    rng: &mut R,
) {
    let k = state.k();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in state.allocations.iter().enumerate() {
        members[c].push(i);
    }
    for (c, m) in members.iter().enumerate() {
        state.locations[c] = model.sample_allocated(data, m, &state.locations[c], &state.global, rng);
    }
    state.locations.truncate(k);
    for _ in 0..state.n_na {
        let loc = model.sample_base(&state.global, rng);
        state.locations.push(loc);
    }
}

pub fn step_global<M: MixtureModel, R: Rng + ?Sized>(
    state: &mut GibbsState<M::Location, M::Global>,
    data: &Dataset,
    model: &M,
    rng: &mut R,
) {
    state.global = model.update_global(data, &state.allocations, &state.locations, &state.global, rng);
}

/// Log Metropolis–Hastings ratio for moving ε → ε' under a log-scale random
/// walk, given ln of the unnormalized targets at both points.
pub fn epsilon_mh_log_ratio(eps: f64, eps_new: f64, ln_target: f64, ln_target_new: f64) -> f64 {
    ln_target_new - ln_target + eps_new.ln() - eps.ln()
}

/// One MH update of ε with target ∝ f_ε(u; n₁..n_k) π(ε). Returns whether
/// the proposal was accepted.
pub fn step_epsilon<L: Clone, G: Clone, R: Rng + ?Sized>(
    state: &mut GibbsState<L, G>,
    intensity: &Intensity,
    kappa: f64,
    prior: &EpsilonPrior,
    step: f64,
    rng: &mut R,
) -> Result<bool> {
    if *prior == EpsilonPrior::Fixed {
        return Ok(false);
    }
    let eps = state.epsilon;
    let eps_new = eps * (step * (2.0 * rng.random::<f64>() - 1.0)).exp();
    let lp_new = prior.ln_density(eps_new);
    if lp_new == f64::NEG_INFINITY {
        return Ok(false);
    }
    let lt = ln_eppf_integrand(intensity, kappa, eps, state.u, &state.sizes)? + prior.ln_density(eps);
    let lt_new = ln_eppf_integrand(intensity, kappa, eps_new, state.u, &state.sizes)? + lp_new;
    let accept = rng.random::<f64>().ln() < epsilon_mh_log_ratio(eps, eps_new, lt, lt_new);
    if accept {
        state.epsilon = eps_new;
    }
    Ok(accept)
}

/// Starting state: clusters from `init`, jumps from one prior realization
/// (largest ones allocated), u = n / T.
pub fn initial_state<M: MixtureModel, R: Rng + ?Sized>(
    data: &Dataset,
    model: &M,
    intensity: &Intensity,
    trunc: &TruncationSpec,
    init: InitStrategy,
    rng: &mut R,
) -> Result<GibbsState<M::Location, M::Global>> {
    let n = data.len();
    let k = match init {
        InitStrategy::Quantiles => ((n as f64).sqrt().ceil() as usize).clamp(1, n),
        InitStrategy::SingleCluster => 1,
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.y[a].total_cmp(&data.y[b]));
    let mut allocations = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        allocations[i] = rank * k / n;
    }
    let mut sizes = vec![0u32; k];
    for &c in &allocations {
        sizes[c] += 1;
    }
    let global = model.init_global(data);

    let prior = PriorSampler::new(intensity, trunc)?;
    let mut jumps = prior.sample_jumps(rng);
    jumps.sort_by(|a, b| b.total_cmp(a));
    if jumps.len() < k {
        let s = JumpSampler::new(intensity, trunc.epsilon, 0.0, 0)?;
        while jumps.len() < k {
            jumps.push(s.sample(rng));
        }
    }
    let n_na = jumps.len() - k;
    let mut locations = Vec::with_capacity(jumps.len());
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in allocations.iter().enumerate() {
        members[c].push(i);
    }
    for m in &members {
        let start = model.sample_base(&global, rng);
        locations.push(model.sample_allocated(data, m, &start, &global, rng));
    }
    for _ in 0..n_na {
        locations.push(model.sample_base(&global, rng));
    }
    let t: f64 = jumps.iter().sum();
    Ok(GibbsState {
        u: (n as f64 / t).max(U_FLOOR),
        epsilon: trunc.epsilon,
        allocations,
        sizes,
        jumps,
        locations,
        global,
        n_na,
        iteration: 0,
    })
}

/// Counters gathered while running a chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainStats {
    pub epsilon_proposals: usize,
    pub epsilon_accepted: usize,
    /// Jump draws that fell back to grid inversion during this chain.
    pub degraded_jump_draws: u64,
    pub warnings: Vec<String>,
}

/// One full sweep.
pub fn sweep<M: MixtureModel, R: Rng + ?Sized>(
    state: &mut GibbsState<M::Location, M::Global>,
    data: &Dataset,
    model: &M,
    config: &ChainConfig,
    stats: &mut ChainStats,
    rng: &mut R,
) -> Result<()> {
    let intensity = &config.intensity;
    let kappa = config.trunc.kappa;
    step_u(state, rng);
    step_allocations(state, data, model, config.exec, rng)?;
    if config.epsilon_prior != EpsilonPrior::Fixed {
        stats.epsilon_proposals += 1;
        if step_epsilon(state, intensity, kappa, &config.epsilon_prior, config.epsilon_step, rng)? {
            stats.epsilon_accepted += 1;
        }
    }
    step_n_nonallocated(state, intensity, kappa, rng)?;
    step_jumps(state, intensity, rng)?;
    step_locations(state, data, model, rng);
    step_global(state, data, model, rng);
    Ok(())
}

pub struct ChainOutput<L, G> {
    pub archive: Archive<L, G>,
    pub stats: ChainStats,
    pub final_state: GibbsState<L, G>,
}

/// The generator used by [`run_chain`].
pub fn chain_rng(config: &ChainConfig) -> ChaCha8Rng {
    substream(config.seed, config.stream)
}

/// Runs burn-in plus `thinning × n_samples` sweeps and keeps every
/// `thinning`-th sweep after burn-in.
pub fn run_chain<M: MixtureModel>(
    config: &ChainConfig,
    data: &Dataset,
    model: &M,
) -> Result<ChainOutput<M::Location, M::Global>> {
    config.validate()?;
    model.check_data(data)?;
    let mut stats = ChainStats::default();
    if config.epsilon_prior != EpsilonPrior::Fixed && matches!(config.intensity, Intensity::Bessel { .. }) {
        stats.warnings.push(
            "updating ε with the Bessel intensity evaluates Bessel series for every proposal; expect much slower sweeps"
                .into(),
        );
    }
    let degraded_before = degraded_draws();
    let mut rng = chain_rng(config);
    let mut state = initial_state(data, model, &config.intensity, &config.trunc, config.init, &mut rng)?;
    let mut archive = Archive::default();
    for s in 1..=config.total_sweeps() {
        state.iteration = s;
        sweep(&mut state, data, model, config, &mut stats, &mut rng).map_err(|e| match e {
            Error::Chain { .. } => e,
            other => Error::Chain {
                sweep: s,
                msg: format!(
                    "{other}; state: k = {}, u = {:e}, ε = {:e}",
                    state.k(),
                    state.u,
                    state.epsilon
                ),
            },
        })?;
        state.check(data.len())?;
        if s > config.n_burnin && (s - config.n_burnin).is_multiple_of(config.thinning) {
            archive.sweeps.push(state.record());
        }
    }
    stats.degraded_jump_draws = degraded_draws() - degraded_before;
    Ok(ChainOutput {
        archive,
        stats,
        final_state: state,
    })
}

/// Random-walk Metropolis update for models without a conjugate location
/// draw: proposes `current + scale · z` coordinatewise on the vector form.
pub fn metropolis_step<R: Rng + ?Sized>(
    current: &[f64],
    scale: f64,
    ln_target: impl Fn(&[f64]) -> f64,
    rng: &mut R,
) -> (Vec<f64>, bool) {
    let proposal: Vec<f64> = current
        .iter()
        .map(|c| c + scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    let ratio = metropolis_log_ratio(current, &proposal, &ln_target);
    if rng.random::<f64>().ln() < ratio {
        (proposal, true)
    } else {
        (current.to_vec(), false)
    }
}

/// ln acceptance ratio of a symmetric proposal.
pub fn metropolis_log_ratio(current: &[f64], proposal: &[f64], ln_target: impl Fn(&[f64]) -> f64) -> f64 {
    let a = ln_target(proposal) - ln_target(current);
    if a.is_nan() {
        f64::NEG_INFINITY
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GaussNig;

    #[test]
    fn weighted_draws() {
        assert_eq!(draw_log_weighted(&[0.0, 0.0], 0.49), Some(0));
        assert_eq!(draw_log_weighted(&[0.0, 0.0], 0.51), Some(1));
        assert_eq!(draw_log_weighted(&[3f64.ln(), 0.0], 0.74), Some(0));
        assert_eq!(draw_log_weighted(&[3f64.ln(), 0.0], 0.76), Some(1));
        assert_eq!(draw_log_weighted(&[-1e4, -1e4 - 1.0], 0.1), Some(0));
        assert_eq!(draw_log_weighted(&[f64::NEG_INFINITY; 2], 0.5), None);
        assert_eq!(draw_log_weighted(&[f64::NEG_INFINITY, 0.0], 0.0), Some(1));
    }

    #[test]
    fn config_errors_are_listed_together() {
        let mut c = ChainConfig::new(Intensity::gamma(1.0).unwrap(), TruncationSpec::new(1e-6, 1.0).unwrap());
        c.thinning = 0;
        c.n_samples = 0;
        match c.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn same_seed_same_archive() {
        let data = Dataset::from_response(vec![-1.0, -0.8, 0.1, 3.0, 3.2, 2.9]);
        let model = GaussNig::new(0.1, 2.0, 1.0, 0.0).unwrap();
        let mut c = ChainConfig::new(Intensity::bessel(1.5).unwrap(), TruncationSpec::new(1e-6, 1.0).unwrap());
        c.n_burnin = 20;
        c.n_samples = 30;
        c.seed = 42;
        let a = run_chain(&c, &data, &model).unwrap().archive;
        c.exec = Execution::Sequential;
        let b = run_chain(&c, &data, &model).unwrap().archive;
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
    }

    #[test]
    fn identical_observations_single_start() {
        let data = Dataset::from_response(vec![1.0; 3]);
        let model = GaussNig::new(0.01, 2.0, 1.0, 1.0).unwrap();
        let mut c = ChainConfig::new(Intensity::gamma(1.0).unwrap(), TruncationSpec::new(1e-6, 0.5).unwrap());
        c.n_burnin = 0;
        c.n_samples = 1000;
        c.init = InitStrategy::SingleCluster;
        let out = run_chain(&c, &data, &model).unwrap();
        assert_eq!(out.archive.len(), 1000);
    }
}
