//! Exact event-driven simulation of the jump process, with time-averaged
//! estimators for densities, bond currents, and entropy production.
//!
//! Waiting times are exponential in the total escape rate and the next jump
//! is drawn proportionally to its rate; there is no time discretization.
//! After a jump only the handful of channels touching the affected sites are
//! recomputed. Replicas run on provably disjoint ChaCha streams and pool
//! their batch means, so a `(seed, stream)` pair reproduces results
//! bit-for-bit regardless of thread scheduling.

use crate::error::{Result, SipError};
use crate::model::{enumerate_transitions, Configuration, ModelParams, Transition};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Batches per replica used for batch-means error bars.
pub const BATCHES_PER_REPLICA: usize = 20;

/// Seed and stream id of a reproducible generator. Identical pairs yield
/// bit-identical trajectories; replica `k` of a simulation uses stream
/// `stream + k`, so distinct runs should space their stream ids accordingly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    /// Base seed shared by all replicas of a run.
    pub seed: u64,
    /// Stream id selecting a disjoint ChaCha counter block.
    pub stream: u64,
}

impl RngStream {
    /// Creates a stream handle.
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Instantiates the generator.
    pub fn build(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// The stream used by replica `k`.
    pub fn replica(&self, k: u64) -> Self {
        Self::new(self.seed, self.stream + k)
    }
}

/// Draws one jump of the process: waiting time `~ Exp(total rate)` and a
/// transition chosen with probability proportional to its rate.
pub fn kmc_step(
    cfg: &Configuration,
    p: &ModelParams,
    rng: &mut ChaCha12Rng,
) -> Result<(Configuration, f64)> {
    let transitions = enumerate_transitions(cfg, p)?;
    let total: f64 = transitions.iter().map(|t| t.rate).sum();
    debug_assert!(total > 0.0, "birth rates keep the escape rate positive");
    let tau = sample_exponential(rng, total);
    let chosen = select_transition(&transitions, total, rng);
    Ok((chosen.target.clone(), tau))
}

fn sample_exponential(rng: &mut ChaCha12Rng, rate: f64) -> f64 {
    // 1 - u lies in (0, 1], so the log is finite
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

fn select_transition<'t>(
    transitions: &'t [Transition],
    total: f64,
    rng: &mut ChaCha12Rng,
) -> &'t Transition {
    let mark = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for t in transitions {
        acc += t.rate;
        if mark < acc {
            return t;
        }
    }
    transitions.last().expect("nonempty transition list")
}

/// Pooled time-averaged estimates of one simulation run.
///
/// Standard errors come from batch means ([`BATCHES_PER_REPLICA`] per
/// replica). `bond_current[i]` is the net left-to-right crossing rate of the
/// bond between sites `i+1` and `i+2`; with the profile slope convention
/// `J = <eta_{i+1} - eta_i>` its expected value is `-beta`. The entropy
/// production observable `w_1 = (b - d)(eta_1 - eta_N)` uses the mean of the
/// two reservoirs' rates, which recovers the unperturbed pair under the
/// symmetric weak drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimates {
    /// Time-averaged density per site.
    pub site_density: Vec<f64>,
    /// Batch-means standard error per site.
    pub site_density_stderr: Vec<f64>,
    /// Net left-to-right crossings per unit time, per bond.
    pub bond_current: Vec<f64>,
    /// Batch-means standard error per bond.
    pub bond_current_stderr: Vec<f64>,
    /// Time-averaged entropy production rate `w_1`.
    pub w1_mean: f64,
    /// Batch-means standard error of `w_1`.
    pub w1_stderr: f64,
    /// Simulated time per replica.
    pub total_time: f64,
    /// Discarded relaxation time per replica.
    pub burn_in: f64,
    /// Independent replicas pooled.
    pub replicas: u32,
    /// Total number of batches pooled.
    pub batches: usize,
}

/// Default burn-in: ten diffusive relaxation times, floored at 100.
pub fn default_burn_in(p: &ModelParams) -> f64 {
    let n = p.n_sites() as f64;
    (10.0 * n * n / p.m()).max(100.0)
}

/// Channel-table engine: rates for the `2(N-1)` bulk jumps and 4 reservoir
/// events, refreshed locally after each jump.
struct Engine {
    p: ModelParams,
    occ: Vec<u32>,
    rates: Vec<f64>,
}

/// What a single event did, for the estimator bookkeeping.
#[derive(Clone, Copy)]
enum Event {
    /// Jump across `bond` (0-based), `direction = +1` for left-to-right.
    Bulk { bond: usize, direction: i8 },
    Boundary,
}

impl Engine {
    fn new(p: ModelParams, occ: Vec<u32>) -> Self {
        let n = p.n_sites();
        let mut engine = Self {
            p,
            occ,
            rates: vec![0.0; 2 * (n - 1) + 4],
        };
        for bond in 0..n - 1 {
            engine.refresh_bond(bond);
        }
        engine.refresh_boundaries();
        engine
    }

    fn refresh_bond(&mut self, bond: usize) {
        let m = self.p.m();
        let (l, r) = (f64::from(self.occ[bond]), f64::from(self.occ[bond + 1]));
        self.rates[2 * bond] = l * (m + r);
        self.rates[2 * bond + 1] = r * (m + l);
    }

    fn refresh_boundaries(&mut self) {
        let n = self.p.n_sites();
        let m = self.p.m();
        let base = 2 * (n - 1);
        let left = f64::from(self.occ[0]);
        let right = f64::from(self.occ[n - 1]);
        self.rates[base] = self.p.b1() * (m + left);
        self.rates[base + 1] = self.p.d1() * left;
        self.rates[base + 2] = self.p.b_n() * (m + right);
        self.rates[base + 3] = self.p.d_n() * right;
    }

    fn refresh_site(&mut self, site: usize) {
        let n = self.p.n_sites();
        if site > 0 {
            self.refresh_bond(site - 1);
        }
        if site < n - 1 {
            self.refresh_bond(site);
        }
        if site == 0 || site == n - 1 {
            self.refresh_boundaries();
        }
    }

    /// Draws the waiting time and the channel without touching the state.
    fn draw(&self, rng: &mut ChaCha12Rng) -> (f64, usize) {
        let total: f64 = self.rates.iter().sum();
        let tau = sample_exponential(rng, total);
        let mark = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (c, &rate) in self.rates.iter().enumerate() {
            acc += rate;
            if mark < acc {
                return (tau, c);
            }
        }
        (tau, self.rates.len() - 1)
    }

    /// Applies the drawn channel and refreshes the affected rates.
    fn apply(&mut self, channel: usize) -> Event {
        let n = self.p.n_sites();
        let base = 2 * (n - 1);
        if channel < base {
            let bond = channel / 2;
            let (from, to, direction) = if channel % 2 == 0 {
                (bond, bond + 1, 1i8)
            } else {
                (bond + 1, bond, -1i8)
            };
            self.occ[from] -= 1;
            self.occ[to] = self.occ[to].checked_add(1).expect("occupation overflow");
            self.refresh_site(from);
            self.refresh_site(to);
            Event::Bulk { bond, direction }
        } else {
            match channel - base {
                0 => {
                    self.occ[0] = self.occ[0].checked_add(1).expect("occupation overflow");
                    self.refresh_site(0);
                }
                1 => {
                    self.occ[0] -= 1;
                    self.refresh_site(0);
                }
                2 => {
                    self.occ[n - 1] = self.occ[n - 1].checked_add(1).expect("occupation overflow");
                    self.refresh_site(n - 1);
                }
                _ => {
                    self.occ[n - 1] -= 1;
                    self.refresh_site(n - 1);
                }
            }
            Event::Boundary
        }
    }
}

/// Per-replica batch accumulators.
struct ReplicaBatches {
    /// `[batch][site]` time integral of the occupancy.
    density: Vec<Vec<f64>>,
    /// `[batch][bond]` signed crossing count.
    crossings: Vec<Vec<f64>>,
    /// `[batch]` time integral of `w_1`.
    w1: Vec<f64>,
    /// `[batch][occupation]` time spent, for one tracked site (when enabled).
    occupancy: Option<Vec<Vec<f64>>>,
}

struct Window {
    burn_in: f64,
    total_time: f64,
    batch_len: f64,
}

impl Window {
    fn batch_of(&self, t: f64) -> usize {
        let k = ((t - self.burn_in) / self.batch_len) as usize;
        k.min(BATCHES_PER_REPLICA - 1)
    }
}

fn run_replica(
    p: &ModelParams,
    window: &Window,
    stream: RngStream,
    tracked_site: Option<usize>,
    b_ref: f64,
    d_ref: f64,
) -> ReplicaBatches {
    let n = p.n_sites();
    let mut rng = stream.build();
    let mut engine = Engine::new(*p, vec![0; n]);
    let mut batches = ReplicaBatches {
        density: vec![vec![0.0; n]; BATCHES_PER_REPLICA],
        crossings: vec![vec![0.0; n - 1]; BATCHES_PER_REPLICA],
        w1: vec![0.0; BATCHES_PER_REPLICA],
        occupancy: tracked_site.map(|_| vec![Vec::new(); BATCHES_PER_REPLICA]),
    };
    let mut t = 0.0f64;
    loop {
        let (tau, channel) = engine.draw(&mut rng);
        // the occupancies are constant on [t, t + tau); integrate before
        // applying the jump
        let t_next = (t + tau).min(window.total_time);
        let lo = t.max(window.burn_in);
        if t_next > lo {
            let w1_now = (b_ref - d_ref)
                * (f64::from(engine.occ[0]) - f64::from(engine.occ[n - 1]));
            let mut seg_lo = lo;
            while seg_lo < t_next {
                let k = window.batch_of(seg_lo);
                let batch_end = window.burn_in + window.batch_len * (k + 1) as f64;
                let seg_hi = t_next.min(batch_end);
                let dt = seg_hi - seg_lo;
                if dt > 0.0 {
                    for (acc, &o) in batches.density[k].iter_mut().zip(&engine.occ) {
                        *acc += dt * f64::from(o);
                    }
                    batches.w1[k] += dt * w1_now;
                    if let (Some(site), Some(hist)) = (tracked_site, batches.occupancy.as_mut())
                    {
                        let occ = engine.occ[site] as usize;
                        let row = &mut hist[k];
                        if row.len() <= occ {
                            row.resize(occ + 1, 0.0);
                        }
                        row[occ] += dt;
                    }
                }
                if seg_hi >= t_next {
                    break;
                }
                seg_lo = seg_hi;
            }
        }
        t += tau;
        if t >= window.total_time {
            break;
        }
        let event = engine.apply(channel);
        if t >= window.burn_in {
            if let Event::Bulk { bond, direction } = event {
                let k = window.batch_of(t);
                batches.crossings[k][bond] += f64::from(direction);
            }
        }
    }
    batches
}

/// Runs `replicas` independent trajectories (in parallel) and pools their
/// batch means.
pub fn run_simulation(
    p: &ModelParams,
    total_time: f64,
    burn_in: f64,
    replicas: u32,
    rng: RngStream,
) -> Result<SimEstimates> {
    run_simulation_impl(p, total_time, burn_in, replicas, rng, None).map(|(est, _)| est)
}

/// Time-weighted occupancy distribution at one site (1-based), with
/// batch-means error bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyHistogram {
    /// The tracked site (1-based).
    pub site: usize,
    /// Probability of each occupation number `0..len`.
    pub probabilities: Vec<f64>,
    /// Batch-means standard error per occupation number.
    pub stderr: Vec<f64>,
}

/// Measures the occupancy histogram of `site` (1-based) on a single stream.
pub fn occupancy_histogram(
    p: &ModelParams,
    site: usize,
    total_time: f64,
    burn_in: f64,
    rng: RngStream,
) -> Result<OccupancyHistogram> {
    if site < 1 || site > p.n_sites() {
        return Err(SipError::InvalidSimulation(format!(
            "site {site} outside 1..={}",
            p.n_sites()
        )));
    }
    let (_, hist) = run_simulation_impl(p, total_time, burn_in, 1, rng, Some(site - 1))?;
    Ok(hist.expect("tracked histogram"))
}

fn run_simulation_impl(
    p: &ModelParams,
    total_time: f64,
    burn_in: f64,
    replicas: u32,
    rng: RngStream,
    tracked_site: Option<usize>,
) -> Result<(SimEstimates, Option<OccupancyHistogram>)> {
    if !total_time.is_finite() || !burn_in.is_finite() || !(burn_in >= 0.0) {
        return Err(SipError::InvalidSimulation(
            "times must be finite and burn-in nonnegative".into(),
        ));
    }
    if total_time <= burn_in {
        return Err(SipError::InvalidSimulation(format!(
            "measurement window is empty: total_time {total_time} <= burn_in {burn_in}"
        )));
    }
    if replicas < 1 {
        return Err(SipError::InvalidSimulation(
            "need at least one replica".into(),
        ));
    }
    let n = p.n_sites();
    let window = Window {
        burn_in,
        total_time,
        batch_len: (total_time - burn_in) / BATCHES_PER_REPLICA as f64,
    };
    let (b_ref, d_ref) = (
        0.5 * (p.b1() + p.b_n()),
        0.5 * (p.d1() + p.d_n()),
    );
    let all: Vec<ReplicaBatches> = (0..replicas as u64)
        .into_par_iter()
        .map(|k| run_replica(p, &window, rng.replica(k), tracked_site, b_ref, d_ref))
        .collect();

    let batch_len = window.batch_len;
    let mut density_batches: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut current_batches: Vec<Vec<f64>> = vec![Vec::new(); n - 1];
    let mut w1_batches: Vec<f64> = Vec::new();
    for rep in &all {
        for k in 0..BATCHES_PER_REPLICA {
            for site in 0..n {
                density_batches[site].push(rep.density[k][site] / batch_len);
            }
            for bond in 0..n - 1 {
                current_batches[bond].push(rep.crossings[k][bond] / batch_len);
            }
            w1_batches.push(rep.w1[k] / batch_len);
        }
    }
    let (site_density, site_density_stderr) = mean_stderr_columns(&density_batches);
    let (bond_current, bond_current_stderr) = mean_stderr_columns(&current_batches);
    let (w1_mean, w1_stderr) = mean_stderr(&w1_batches);

    let histogram = tracked_site.map(|site0| {
        let max_occ = all
            .iter()
            .flat_map(|r| r.occupancy.as_ref().expect("tracked").iter())
            .map(|row| row.len())
            .max()
            .unwrap_or(1);
        let mut prob_batches: Vec<Vec<f64>> = vec![Vec::new(); max_occ];
        for rep in &all {
            for row in rep.occupancy.as_ref().expect("tracked") {
                for (occ, col) in prob_batches.iter_mut().enumerate() {
                    let mass = row.get(occ).copied().unwrap_or(0.0);
                    col.push(mass / batch_len);
                }
            }
        }
        let (probabilities, stderr) = mean_stderr_columns(&prob_batches);
        OccupancyHistogram {
            site: site0 + 1,
            probabilities,
            stderr,
        }
    });

    Ok((
        SimEstimates {
            site_density,
            site_density_stderr,
            bond_current,
            bond_current_stderr,
            w1_mean,
            w1_stderr,
            total_time,
            burn_in,
            replicas,
            batches: replicas as usize * BATCHES_PER_REPLICA,
        },
        histogram,
    ))
}

fn mean_stderr(batches: &[f64]) -> (f64, f64) {
    let k = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / k;
    if batches.len() < 2 {
        return (mean, 0.0);
    }
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn mean_stderr_columns(columns: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let mut means = Vec::with_capacity(columns.len());
    let mut errs = Vec::with_capacity(columns.len());
    for col in columns {
        let (m, e) = mean_stderr(col);
        means.push(m);
        errs.push(e);
    }
    (means, errs)
}

/// Batch-means z-statistic summed over bins: `sum_k ((obs_k - exp_k)/se_k)^2`,
/// approximately chi-square with `bins` degrees of freedom (cross-bin
/// correlations are neglected).
pub fn chi_square_statistic(observed: &[f64], stderr: &[f64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(stderr)
        .zip(expected)
        .map(|((&o, &se), &e)| {
            let d = o - e;
            if se > 0.0 {
                (d / se).powi(2)
            } else if d.abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Upper chi-square quantile: rejection threshold at significance `alpha`.
pub fn chi_square_threshold(dof: usize, alpha: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof as f64)
        .expect("positive dof")
        .inverse_cdf(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generator_apply;

    #[test]
    fn step_from_empty_two_site_system() {
        let p = ModelParams::equilibrium(2, 1.0, 1.0, 1.0).unwrap();
        let cfg = Configuration::new(vec![0, 0]);
        let mut rng = RngStream::new(7, 0).build();
        let draws = 100_000usize;
        let mut left = 0usize;
        let mut wait_sum = 0.0;
        for _ in 0..draws {
            let (next, tau) = kmc_step(&cfg, &p, &mut rng).unwrap();
            wait_sum += tau;
            if next.occupations()[0] == 1 {
                left += 1;
            }
        }
        // two channels of rate 1 each: P(left) = 1/2, mean wait = 1/2
        let p_left = left as f64 / draws as f64;
        let se = 0.5 / (draws as f64).sqrt();
        assert!((p_left - 0.5).abs() < 3.0 * se, "P(left) = {p_left}");
        let mean_wait = wait_sum / draws as f64;
        let se_wait = 0.5 / (draws as f64).sqrt();
        assert!(
            (mean_wait - 0.5).abs() < 3.0 * se_wait,
            "mean wait {mean_wait}"
        );
    }

    #[test]
    fn same_seed_same_trajectory() {
        let p = ModelParams::equilibrium(3, 1.0, 1.0, 2.0).unwrap();
        let mut a = RngStream::new(42, 3).build();
        let mut b = RngStream::new(42, 3).build();
        let mut cfg_a = Configuration::new(vec![1, 0, 2]);
        let mut cfg_b = cfg_a.clone();
        for _ in 0..1000 {
            let (na, ta) = kmc_step(&cfg_a, &p, &mut a).unwrap();
            let (nb, tb) = kmc_step(&cfg_b, &p, &mut b).unwrap();
            assert_eq!(na, nb);
            assert_eq!(ta.to_bits(), tb.to_bits());
            cfg_a = na;
            cfg_b = nb;
        }
    }

    #[test]
    fn one_step_increment_matches_generator() {
        // E[delta eta_1 per step] * R = L eta_1
        let p = ModelParams::equilibrium(3, 1.0, 1.0, 2.0).unwrap();
        let cfg = Configuration::new(vec![2, 1, 0]);
        let expected_rate =
            generator_apply(|c| f64::from(c.occupations()[0]), &cfg, &p).unwrap();
        let total: f64 = enumerate_transitions(&cfg, &p)
            .unwrap()
            .iter()
            .map(|t| t.rate)
            .sum();
        let mut rng = RngStream::new(11, 0).build();
        let draws = 200_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..draws {
            let (next, _) = kmc_step(&cfg, &p, &mut rng).unwrap();
            let delta = f64::from(next.occupations()[0]) - f64::from(cfg.occupations()[0]);
            sum += delta;
            sumsq += delta * delta;
        }
        let mean = sum / draws as f64;
        let var = sumsq / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        let target = expected_rate / total;
        assert!(
            (mean - target).abs() < 3.0 * se,
            "E[delta] = {mean} vs {target} (se {se})"
        );
    }

    #[test]
    fn engine_agrees_with_transition_enumeration() {
        // channel rates must reproduce the enumerated rates after any jump
        let p = ModelParams::perturbed(1.0, 2.0, 0.2, 4, 1.5).unwrap();
        let mut rng = RngStream::new(3, 1).build();
        let mut engine = Engine::new(p, vec![0; 4]);
        for _ in 0..2000 {
            let cfg = Configuration::new(engine.occ.clone());
            let expected: f64 = enumerate_transitions(&cfg, &p)
                .unwrap()
                .iter()
                .map(|t| t.rate)
                .sum();
            let total: f64 = engine.rates.iter().sum();
            assert!(
                (total - expected).abs() < 1e-12 * expected.max(1.0),
                "escape {total} vs {expected}"
            );
            let (_, channel) = engine.draw(&mut rng);
            engine.apply(channel);
        }
    }

    #[test]
    fn run_simulation_validates_inputs() {
        let p = ModelParams::equilibrium(3, 1.0, 1.0, 2.0).unwrap();
        assert!(run_simulation(&p, 10.0, 10.0, 1, RngStream::new(1, 0)).is_err());
        assert!(run_simulation(&p, f64::NAN, 0.0, 1, RngStream::new(1, 0)).is_err());
        assert!(run_simulation(&p, 10.0, 0.0, 0, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn reproducible_estimates() {
        let p = ModelParams::perturbed(1.0, 2.0, 0.1, 3, 1.0).unwrap();
        let a = run_simulation(&p, 500.0, 50.0, 2, RngStream::new(5, 9)).unwrap();
        let b = run_simulation(&p, 500.0, 50.0, 2, RngStream::new(5, 9)).unwrap();
        assert_eq!(a, b);
        let c = run_simulation(&p, 500.0, 50.0, 2, RngStream::new(6, 9)).unwrap();
        assert_ne!(a.site_density, c.site_density);
    }

    #[test]
    fn equilibrium_densities_and_w1() {
        let p = ModelParams::equilibrium(3, 1.0, 1.0, 2.0).unwrap();
        let est = run_simulation(&p, 20_000.0, 100.0, 2, RngStream::new(2024, 0)).unwrap();
        for (density, se) in est.site_density.iter().zip(&est.site_density_stderr) {
            assert!(
                (density - 1.0).abs() < 3.0 * se,
                "density {density} (se {se})"
            );
        }
        assert!(est.w1_mean.abs() < 3.0 * est.w1_stderr);
        for (j, se) in est.bond_current.iter().zip(&est.bond_current_stderr) {
            assert!(j.abs() < 3.0 * se, "current {j} (se {se})");
        }
    }

    #[test]
    fn driven_current_matches_weak_slope() {
        let (b, d, m, eps) = (1.0, 2.0, 1.0, 0.1);
        let p = ModelParams::perturbed(b, d, eps, 3, m).unwrap();
        let est = run_simulation(&p, 30_000.0, 100.0, 2, RngStream::new(31, 0)).unwrap();
        let beta = crate::analytic::density_profile_weak(b, d, m, 3, eps)
            .unwrap()
            .beta;
        for (j, se) in est.bond_current.iter().zip(&est.bond_current_stderr) {
            assert!(
                (j - (-beta)).abs() < 3.0 * se,
                "current {j} vs {} (se {se})",
                -beta
            );
        }
    }

    #[test]
    fn histogram_matches_equilibrium_marginal() {
        let p = ModelParams::equilibrium(3, 1.0, 1.0, 2.0).unwrap();
        let hist = occupancy_histogram(&p, 2, 20_000.0, 100.0, RngStream::new(77, 0)).unwrap();
        assert_eq!(hist.site, 2);
        let total: f64 = hist.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "histogram mass {total}");
        for n in 0..6usize {
            let expected = crate::analytic::marginal_pmf(0.5, 1.0, n as u32).unwrap();
            let (obs, se) = (hist.probabilities[n], hist.stderr[n]);
            assert!(
                (obs - expected).abs() < 4.0 * se,
                "bin {n}: {obs} vs {expected} (se {se})"
            );
        }
        assert!(occupancy_histogram(&p, 0, 100.0, 0.0, RngStream::new(1, 0)).is_err());
        assert!(occupancy_histogram(&p, 4, 100.0, 0.0, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn chi_square_helpers() {
        let t = chi_square_threshold(11, 0.01);
        assert!((t - 24.725).abs() < 0.01, "chi2(11) 99% = {t}");
        let stat = chi_square_statistic(&[1.0, 2.0], &[0.5, 0.5], &[1.0, 2.0]);
        assert_eq!(stat, 0.0);
        let stat = chi_square_statistic(&[1.0], &[0.5], &[2.0]);
        assert_eq!(stat, 4.0);
    }
}
